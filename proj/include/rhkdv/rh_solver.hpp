#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "cauchy_kernel.hpp"

namespace rhkdv {

// Phi(inf) = [1,1] (a row vector RHP) or the identity (matrix RHP, kept for diagnostics).
enum class Normalization { vector, matrix };

using JumpFunction = std::function<Mat2(cplx)>;

// How the density on one piece is generated from the unknowns of the collocation system.
//
// A primary piece owns unknowns z_i and a map [c1; c2] = map * z_i from them to the coefficients
// of both density components; equations are imposed (both components) at the reference
// coordinates listed in points. An image piece is the negative of its source piece and has no
// unknowns of its own: the symmetry Phi(-k) = Phi(k) sigma2 gives c1 = R c2_src, c2 = R c1_src.
struct PieceReduction {
  enum class Role { primary, image } role = Role::primary;
  int source = -1;          // image pieces only
  MatC map;                 // primary: 2n x m
  MatC map_x;               // x-derivative of map; empty when map does not depend on x
  std::vector<double> points;
};

struct RHProblem {
  Contour contour;
  std::vector<JumpFunction> jump;   // per piece, G(k)
  std::vector<JumpFunction> jump_x; // per piece, dG/dx (optional)
  Normalization normalization = Normalization::vector;
  std::vector<PieceReduction> reduction; // symmetric reduction, vector problems only; empty: none
  std::vector<PieceReduction> unreduced; // per-piece maps without symmetry; empty: identity maps
  double tol = 1e-8;
  double max_condition = 1e12;
  double max_residual = 1e-6;
  std::string label; // context for diagnostics, e.g. the (x,t) point
};

namespace detail {
struct System;
}

struct RHSolution {
  Density density;
  MatC at_infinity; // 1x2 or 2x2
  double residual = 0.0;
  double condition = 0.0;
  bool converged = false; // residual < problem.tol
  Normalization normalization = Normalization::vector;
  std::shared_ptr<const detail::System> system;
  std::vector<MatC> minus; // C^-[u] at the nodes of every piece, kept from the residual check
};

inline int total_nodes(const Contour &c) {
  int n = 0;
  for (const auto &p : c.pieces) n += p.n;
  return n;
}

inline cplx point_at(const ContourPiece &p, double s) {
  return p.kind == PieceKind::segment ? p.a + (p.b - p.a) * (0.5 * (1.0 + s)) : p.gamma(s);
}

inline cplx direction_at(const ContourPiece &p, double s) {
  return p.kind == PieceKind::segment ? p.b - p.a : p.dgamma(s);
}

// Coefficient map R with coeffs(v) = R coeffs(u), where v(k) = +-u(-k) is a density on `to`
// built from a density u on `from` = -`to`. The sign is -1 when negation reverses orientation,
// because then the two sides of the contour are exchanged.
inline MatC mirror_map(const ContourPiece &from, const ContourPiece &to) {
  require(from.kind == to.kind && from.basis == to.basis && from.n == to.n, "mirror_map: pieces are not images");
  double tol = 1e-9 * std::max(1.0, from.scale());
  if (from.kind == PieceKind::segment) {
    // exact: s -> -s (or s) on the reference interval; T_m(-s) = (-1)^m T_m(s), and the two
    // weighted families of a band trade places because w(-s) = 1/w(s)
    bool reversed = std::abs(from.a + to.b) < tol && std::abs(from.b + to.a) < tol;
    bool same = std::abs(from.a + to.a) < tol && std::abs(from.b + to.b) < tol;
    if (!reversed && !same) fail(ErrorKind::invalid_argument, "mirror_map: " + describe(to) + " is not the negative of " + describe(from));
    double sign = reversed ? -1.0 : 1.0;
    MatC R = MatC::Zero(to.n, from.n);
    if (from.basis == SegmentBasis::chebyshev) {
      for (int m = 0; m < to.n; ++m) R(m, m) = sign * (reversed && m % 2 ? -1.0 : 1.0);
    } else {
      int h = to.n / 2;
      for (int m = 0; m < h; ++m) {
        double e = sign * (reversed && m % 2 ? -1.0 : 1.0);
        if (reversed) R(m, h + m) = R(h + m, m) = e;
        else R(m, m) = R(h + m, h + m) = e;
      }
    }
    return R;
  }
  MatC S(to.n, from.n);
  for (int l = 0; l < to.n; ++l) {
    cplx z = -to.nodes[l];
    if (from.distance(z) > tol) fail(ErrorKind::invalid_argument, "mirror_map: " + describe(to) + " is not the negative of " + describe(from));
    double s = parameter_of(from, z);
    cplx df = direction_at(from, s), dt = to.tangent(l);
    double sign = std::abs(df / std::abs(df) + dt) < std::abs(df / std::abs(df) - dt) ? 1.0 : -1.0;
    S.row(l) = sign * basis_row(from, s);
  }
  return basis_matrix(to).partialPivLu().solve(S);
}

// For every piece the index of the piece that equals its negative (possibly itself), or -1.
inline std::vector<int> find_mirrors(const Contour &c, double tol = 1e-9) {
  std::vector<int> m(c.size(), -1);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) {
      const auto &p = c.pieces[i], &q = c.pieces[j];
      if (p.kind != q.kind || p.n != q.n || p.basis != q.basis) continue;
      bool ok = true;
      for (cplx z : p.nodes)
        if (q.distance(-z) > tol * std::max(1.0, q.scale())) {
          ok = false;
          break;
        }
      if (ok) {
        m[i] = int(j);
        break;
      }
    }
  return m;
}

inline PieceReduction independent_piece(const ContourPiece &p) {
  PieceReduction r;
  r.map = MatC::Identity(2 * p.n, 2 * p.n);
  r.points = p.ref;
  return r;
}

inline std::vector<PieceReduction> general_reduction(const Contour &c) {
  std::vector<PieceReduction> r;
  for (const auto &p : c.pieces) r.push_back(independent_piece(p));
  return r;
}

// Reduction by the symmetry Phi(-k) = Phi(k) sigma2 of the vector problem. Of each pair of mirror
// pieces the first keeps its unknowns and equations; a self-mirror piece keeps the first
// component only and imposes equations on the half with Re k > 0.
inline std::vector<PieceReduction> symmetric_reduction(const Contour &c, const std::vector<int> &mirror) {
  require(mirror.size() == c.size(), "symmetric_reduction: mirror table size");
  std::vector<PieceReduction> r(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto &p = c.pieces[i];
    int j = mirror[i];
    if (j < 0) fail(ErrorKind::invalid_argument, "symmetric_reduction: " + describe(p) + " has no mirror image");
    if (j == int(i)) {
      PieceReduction pr;
      pr.map.resize(2 * p.n, p.n);
      pr.map.topRows(p.n).setIdentity();
      pr.map.bottomRows(p.n) = mirror_map(p, p);
      for (int l = 0; l < p.n; ++l) {
        cplx z = p.nodes[l];
        if (z.real() > 0 || (z.real() == 0 && z.imag() > 0)) pr.points.push_back(p.ref[l]);
      }
      r[i] = pr;
    } else if (j > int(i)) {
      r[i] = independent_piece(p);
    } else {
      r[i].role = PieceReduction::Role::image;
      r[i].source = j;
    }
  }
  return r;
}

namespace detail {

struct CollocationPoint {
  int piece;
  double s;
  cplx z;
  Mat2 G;
};

struct System {
  int ntot = 0;
  std::vector<int> offset;      // coefficient offset per piece
  std::vector<std::pair<int, int>> cols; // per piece: first column and width of its nonzero block in L
  MatC L;                       // 2 ntot x m
  MatC Lx;                      // same shape, or empty
  std::vector<CollocationPoint> pts;
  MatC K, B;                    // P x ntot: C^- and basis values at the collocation points
  MatC A;                       // 2P x m
  std::optional<Eigen::PartialPivLU<MatC>> lu;
  std::optional<Eigen::ColPivHouseholderQR<MatC>> qr;
  MatC z;                       // m x rows

  MatC solve(const MatC &rhs) const { return lu ? MatC(lu->solve(rhs)) : MatC(qr->solve(rhs)); }
};

inline std::vector<PieceReduction> effective_reduction(const RHProblem &pb) {
  if (pb.normalization == Normalization::vector && !pb.reduction.empty()) return pb.reduction;
  if (!pb.unreduced.empty()) return pb.unreduced;
  return general_reduction(pb.contour);
}

inline void build_maps(const Contour &c, const std::vector<PieceReduction> &red, System &S) {
  S.offset.assign(c.size(), 0);
  S.ntot = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    S.offset[i] = S.ntot;
    S.ntot += c.pieces[i].n;
  }
  std::vector<int> zoff(c.size(), 0);
  int m = 0;
  bool any_x = false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (red[i].role != PieceReduction::Role::primary) continue;
    require(red[i].map.rows() == 2 * c.pieces[i].n, "reduction: map rows must be 2n on " + describe(c.pieces[i]));
    zoff[i] = m;
    m += int(red[i].map.cols());
    any_x = any_x || red[i].map_x.size() > 0;
  }
  int N = S.ntot;
  S.cols.assign(c.size(), {0, 0});
  for (std::size_t i = 0; i < c.size(); ++i) {
    int src = red[i].role == PieceReduction::Role::primary ? int(i) : red[i].source;
    if (src >= 0 && src < int(c.size()) && red[src].role == PieceReduction::Role::primary)
      S.cols[i] = {zoff[src], int(red[src].map.cols())};
  }
  S.L = MatC::Zero(2 * N, m);
  if (any_x) S.Lx = MatC::Zero(2 * N, m);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto &r = red[i];
    int n = c.pieces[i].n, o = S.offset[i];
    if (r.role == PieceReduction::Role::primary) {
      int w = int(r.map.cols());
      S.L.block(o, zoff[i], n, w) = r.map.topRows(n);
      S.L.block(N + o, zoff[i], n, w) = r.map.bottomRows(n);
      if (r.map_x.size() > 0) {
        S.Lx.block(o, zoff[i], n, w) = r.map_x.topRows(n);
        S.Lx.block(N + o, zoff[i], n, w) = r.map_x.bottomRows(n);
      }
    }
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto &r = red[i];
    if (r.role != PieceReduction::Role::image) continue;
    int j = r.source;
    require(j >= 0 && j < int(c.size()) && red[j].role == PieceReduction::Role::primary,
            "reduction: image piece must reference a primary piece");
    MatC R = mirror_map(c.pieces[j], c.pieces[i]);
    int n = c.pieces[i].n, o = S.offset[i], os = S.offset[j];
    auto [c0, w] = S.cols[j];
    S.L.block(o, c0, n, w) = R * S.L.block(N + os, c0, n, w);
    S.L.block(N + o, c0, n, w) = R * S.L.block(os, c0, n, w);
    if (any_x) {
      S.Lx.block(o, c0, n, w) = R * S.Lx.block(N + os, c0, n, w);
      S.Lx.block(N + o, c0, n, w) = R * S.Lx.block(os, c0, n, w);
    }
  }
}

inline void check_jump(const Mat2 &G, const std::string &where) {
  if (!G.allFinite()) fail(ErrorKind::solver, "non-finite jump matrix at " + where);
}

// Operator applied to a stacked coefficient vector w = [w1; w2] (2 ntot x cols): equations at
// the collocation points, both components.
inline MatC apply_operator(const System &S, const MatC &w) {
  int N = S.ntot, P = int(S.pts.size());
  MatC Kw1 = S.K * w.topRows(N), Kw2 = S.K * w.bottomRows(N);
  MatC Bw1 = S.B * w.topRows(N), Bw2 = S.B * w.bottomRows(N);
  MatC out(2 * P, w.cols());
  for (int r = 0; r < P; ++r) {
    Mat2 E = S.pts[r].G - Mat2::Identity();
    out.row(r) = Bw1.row(r) - E(0, 0) * Kw1.row(r) - E(1, 0) * Kw2.row(r);
    out.row(P + r) = Bw2.row(r) - E(0, 1) * Kw1.row(r) - E(1, 1) * Kw2.row(r);
  }
  return out;
}

// apply_operator for a reduction matrix (S.L or S.Lx), using that the rows of piece i are zero
// outside the column block S.cols[i].
inline MatC apply_operator_blocks(const System &S, const MatC &L, const std::vector<int> &piece_of_point) {
  int N = S.ntot, P = int(S.pts.size()), m = int(L.cols());
  MatC Kw1 = MatC::Zero(P, m), Kw2 = MatC::Zero(P, m);
  for (std::size_t i = 0; i < S.offset.size(); ++i) {
    auto [c0, w] = S.cols[i];
    if (w == 0) continue;
    int o = S.offset[i], n = (i + 1 < S.offset.size() ? S.offset[i + 1] : N) - o;
    Kw1.middleCols(c0, w).noalias() += S.K.middleCols(o, n) * L.block(o, c0, n, w);
    Kw2.middleCols(c0, w).noalias() += S.K.middleCols(o, n) * L.block(N + o, c0, n, w);
  }
  MatC out(2 * P, m);
  for (int r = 0; r < P; ++r) {
    int i = piece_of_point[r], o = S.offset[i];
    int n = (i + 1 < int(S.offset.size()) ? S.offset[i + 1] : N) - o;
    auto [c0, w] = S.cols[i];
    RowC b = S.B.block(r, o, 1, n);
    Mat2 E = S.pts[r].G - Mat2::Identity();
    out.row(r) = -E(0, 0) * Kw1.row(r) - E(1, 0) * Kw2.row(r);
    out.row(P + r) = -E(0, 1) * Kw1.row(r) - E(1, 1) * Kw2.row(r);
    out.block(r, c0, 1, w) += b * L.block(o, c0, n, w);
    out.block(P + r, c0, 1, w) += b * L.block(N + o, c0, n, w);
  }
  return out;
}

inline Density to_density(const Contour &c, const System &S, const MatC &coef, int rows) {
  // coef: 2 ntot x rows (one column per row of Phi)
  Density d;
  d.width = 2 * rows;
  for (std::size_t i = 0; i < c.size(); ++i) {
    int n = c.pieces[i].n, o = S.offset[i];
    MatC blk(n, 2 * rows);
    for (int r = 0; r < rows; ++r) {
      blk.col(2 * r) = coef.block(o, r, n, 1);
      blk.col(2 * r + 1) = coef.block(S.ntot + o, r, n, 1);
    }
    d.coeffs.push_back(blk);
  }
  return d;
}

inline MatC rows_of(const RowC &flat, int rows) {
  MatC m(rows, 2);
  for (int r = 0; r < rows; ++r) m.row(r) = flat.segment(2 * r, 2);
  return m;
}

// Max over all nodes of |Phi^+ - Phi^- G - F| where F = Phi0^- Gx for derivative problems.
// C^+ is recovered from C^- through C^+ - C^- = u; C^-[u] is returned through *minus_out.
inline double full_residual(const RHProblem &pb, const Density &u, const MatC &inf, const std::vector<JumpFunction> &jumps,
                            const std::vector<MatC> *base_minus, const MatC *base_inf, std::vector<MatC> *minus_out) {
  const Contour &c = pb.contour;
  int rows = int(inf.rows());
  auto minus = cauchy_boundary(u, c, -1);
  double res = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    MatC plus = minus[i] + basis_matrix(c.pieces[i]) * u.coeffs[i];
    for (int l = 0; l < c.pieces[i].n; ++l) {
      Mat2 G = pb.jump[i](c.pieces[i].nodes[l]);
      MatC pp = inf + rows_of(plus.row(l), rows), pm = inf + rows_of(minus[i].row(l), rows);
      MatC d = pp - pm * G;
      if (base_minus) {
        MatC b0 = *base_inf + rows_of((*base_minus)[i].row(l), rows);
        d -= b0 * jumps[i](c.pieces[i].nodes[l]);
      }
      res = std::max(res, d.cwiseAbs().maxCoeff());
    }
  }
  if (minus_out) *minus_out = std::move(minus);
  return res;
}

inline std::string sizes_of(const Contour &c) {
  std::string s;
  for (const auto &p : c.pieces) s += (s.empty() ? "" : ",") + std::to_string(p.n);
  return "[" + s + "]";
}

} // namespace detail

// Solve Phi^+ = Phi^- G by collocation. Throws Error(solver) when the system is singular,
// ill-conditioned beyond max_condition, or the residual exceeds max_residual.
inline RHSolution solve(const RHProblem &pb) {
  const Contour &c = pb.contour;
  require(pb.jump.size() == c.size(), "solve: one jump function per piece required");
  auto red = detail::effective_reduction(pb);
  require(red.size() == c.size(), "solve: one reduction entry per piece required");
  int rows = pb.normalization == Normalization::vector ? 1 : 2;
  MatC inf = pb.normalization == Normalization::vector ? MatC(MatC::Ones(1, 2)) : MatC(MatC::Identity(2, 2));

  RHSolution sol;
  sol.normalization = pb.normalization;
  sol.at_infinity = inf;
  if (c.empty()) {
    sol.density.width = 2 * rows;
    sol.converged = true;
    auto S = std::make_shared<detail::System>();
    sol.system = S;
    return sol;
  }

  auto S = std::make_shared<detail::System>();
  detail::build_maps(c, red, *S);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (red[i].role != PieceReduction::Role::primary) continue;
    for (double s : red[i].points) {
      cplx z = point_at(c.pieces[i], s);
      Mat2 G = pb.jump[i](z);
      detail::check_jump(G, describe(c.pieces[i]) + " " + pb.label);
      S->pts.push_back({int(i), s, z, G});
    }
  }
  int P = int(S->pts.size()), N = S->ntot;
  S->K = MatC::Zero(P, N);
  S->B = MatC::Zero(P, N);
  for (int r = 0; r < P; ++r) {
    const auto &pt = S->pts[r];
    for (std::size_t k = 0; k < c.size(); ++k) {
      const auto &q = c.pieces[k];
      if (int(k) == pt.piece) {
        S->K.block(r, S->offset[k], 1, q.n) = boundary_row(q, pt.s, -1);
        S->B.block(r, S->offset[k], 1, q.n) = basis_row(q, pt.s);
      } else {
        S->K.block(r, S->offset[k], 1, q.n) = cauchy_row(q, pt.z);
      }
    }
  }
  std::vector<int> piece_of_point(P);
  for (int r = 0; r < P; ++r) piece_of_point[r] = S->pts[r].piece;
  S->A = detail::apply_operator_blocks(*S, S->L, piece_of_point);
  int m = int(S->A.cols());
  MatC rhs(2 * P, rows);
  for (int r = 0; r < P; ++r) {
    Mat2 E = S->pts[r].G - Mat2::Identity();
    for (int j = 0; j < rows; ++j) {
      rhs(r, j) = inf(j, 0) * E(0, 0) + inf(j, 1) * E(1, 0);
      rhs(P + r, j) = inf(j, 0) * E(0, 1) + inf(j, 1) * E(1, 1);
    }
  }
  if (2 * P == m) {
    S->lu.emplace(S->A);
    double rc = S->lu->rcond();
    sol.condition = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  } else {
    require(2 * P > m, "solve: fewer equations than unknowns");
    S->qr.emplace(S->A);
    const auto &R = S->qr->matrixQR();
    double big = std::abs(R(0, 0)), small = std::abs(R(m - 1, m - 1));
    sol.condition = small > 0 ? big / small : std::numeric_limits<double>::infinity();
  }
  S->z = S->solve(rhs);
  if (!S->z.allFinite() || !(sol.condition < pb.max_condition))
    fail(ErrorKind::solver, "collocation matrix is singular or ill-conditioned (cond " + std::to_string(sol.condition) +
                                ") at " + pb.label + ", piece sizes " + detail::sizes_of(c));
  MatC coef = S->L * S->z;
  sol.density = detail::to_density(c, *S, coef, rows);
  sol.residual = detail::full_residual(pb, sol.density, inf, pb.jump, nullptr, nullptr, &sol.minus);
  sol.converged = sol.residual < pb.tol;
  if (!(sol.residual <= pb.max_residual))
    fail(ErrorKind::solver, "collocation residual " + std::to_string(sol.residual) + " exceeds " +
                                std::to_string(pb.max_residual) + " at " + pb.label + ", piece sizes " + detail::sizes_of(c));
  sol.system = S;
  return sol;
}

// Density of d/dx Phi: the same operator with right-hand side Phi^- dG/dx.
inline RHSolution solve_x_derivative(const RHSolution &sol, const RHProblem &pb) {
  const Contour &c = pb.contour;
  int rows = sol.normalization == Normalization::vector ? 1 : 2;
  RHSolution d;
  d.normalization = sol.normalization;
  d.at_infinity = MatC::Zero(rows, 2);
  d.condition = sol.condition;
  if (c.empty()) {
    d.density.width = 2 * rows;
    d.converged = true;
    d.system = sol.system;
    return d;
  }
  require(pb.jump_x.size() == c.size(), "solve_x_derivative: x-derivative of the jump is missing");
  for (const auto &f : pb.jump_x) require(bool(f), "solve_x_derivative: x-derivative of the jump is missing");
  const auto &S = *sol.system;
  int P = int(S.pts.size()), N = S.ntot;
  MatC coef = S.L * S.z;
  MatC K1 = S.K * coef.topRows(N), K2 = S.K * coef.bottomRows(N);
  MatC rhs(2 * P, rows);
  for (int r = 0; r < P; ++r) {
    Mat2 Gx = pb.jump_x[S.pts[r].piece](S.pts[r].z);
    detail::check_jump(Gx, "x-derivative " + pb.label);
    for (int j = 0; j < rows; ++j) {
      cplx f1 = sol.at_infinity(j, 0) + K1(r, j), f2 = sol.at_infinity(j, 1) + K2(r, j);
      rhs(r, j) = f1 * Gx(0, 0) + f2 * Gx(1, 0);
      rhs(P + r, j) = f1 * Gx(0, 1) + f2 * Gx(1, 1);
    }
  }
  MatC cx;
  if (S.Lx.size() > 0) {
    MatC w = S.Lx * S.z;
    rhs -= detail::apply_operator(S, w);
    cx = S.L * S.solve(rhs) + w;
  } else {
    cx = S.L * S.solve(rhs);
  }
  d.density = detail::to_density(c, S, cx, rows);
  std::vector<MatC> base_minus = sol.minus.empty() ? cauchy_boundary(sol.density, c, -1) : sol.minus;
  d.residual = detail::full_residual(pb, d.density, d.at_infinity, pb.jump_x, &base_minus, &sol.at_infinity, nullptr);
  d.converged = d.residual < pb.tol;
  d.system = sol.system;
  return d;
}

// Phi(k) = Phi(inf) + C[u](k) for k off the contour.
inline MatC evaluate_phi(const RHSolution &sol, const RHProblem &pb, cplx k) {
  int rows = int(sol.at_infinity.rows());
  if (pb.contour.empty()) return sol.at_infinity;
  return sol.at_infinity + detail::rows_of(cauchy_eval(sol.density, pb.contour, k), rows);
}

// Boundary value of Phi from the given side at reference coordinate s of piece i.
inline MatC boundary_phi(const RHSolution &sol, const RHProblem &pb, std::size_t i, double s, int side) {
  const Contour &c = pb.contour;
  int rows = int(sol.at_infinity.rows());
  cplx z = point_at(c.pieces[i], s);
  RowC v = boundary_row(c.pieces[i], s, side) * sol.density.coeffs[i];
  for (std::size_t k = 0; k < c.size(); ++k)
    if (k != i) v += cauchy_row(c.pieces[k], z) * sol.density.coeffs[k];
  return sol.at_infinity + detail::rows_of(v, rows);
}

// s1 = lim k (Phi(k) - Phi(inf)).
inline MatC asymptotic_coefficient(const RHSolution &sol, const Contour &c) {
  int rows = int(sol.at_infinity.rows());
  if (c.empty()) return MatC::Zero(rows, 2);
  return detail::rows_of(first_moment(sol.density, c), rows);
}

} // namespace rhkdv
