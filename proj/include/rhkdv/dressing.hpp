#pragma once

#include "scenario.hpp"

namespace rhkdv {

// Maximum deviations of the three symmetry conditions on the jump, sampled at every node.
struct SymmetryReport {
  double det = 0.0;         // |det V - 1|
  double conjugation = 0.0; // |conj V(conj k) - V(-k)|
  double inverse = 0.0;     // |V^{-1}(k) - sigma2 conj V(conj k) sigma2|
  double max() const { return std::max({det, conjugation, inverse}); }
};

namespace detail {

struct Located {
  int piece = -1;
  double s = 0.0;
};

inline Located locate(const Contour &c, cplx z) {
  Located best;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    double d = c.pieces[i].distance(z);
    if (d < bd) bd = d, best.piece = int(i);
  }
  if (best.piece < 0 || bd > 1e-9 * std::max(1.0, c.pieces[best.piece].scale())) return Located{};
  best.s = parameter_of(c.pieces[best.piece], z);
  return best;
}

inline cplx unit(cplx d) { return d / std::abs(d); }

} // namespace detail

// The symmetries are stated for a contour like the real line, which conjugation maps to itself
// with its orientation and negation maps to itself reversed. Where a piece pairing behaves the
// other way round, the jump on the partner is inverted before comparing.
inline SymmetryReport validate_symmetries(const RHProblem &pb) {
  SymmetryReport rep;
  const Contour &c = pb.contour;
  Mat2 s2 = sigma2();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto &p = c.pieces[i];
    for (int l = 0; l < p.n; ++l) {
      cplx k = p.nodes[l];
      Mat2 G = pb.jump[i](k);
      rep.det = std::max(rep.det, std::abs(G.determinant() - 1.0));
      cplx tk = detail::unit(direction_at(p, p.ref[l]));

      auto cj = detail::locate(c, std::conj(k));
      auto ng = detail::locate(c, -k);
      if (cj.piece < 0 || ng.piece < 0)
        fail(ErrorKind::symmetry, "validate_symmetries: no piece contains the conjugate or negative of a node of " + describe(p));

      Mat2 Gc = pb.jump[cj.piece](std::conj(k));
      cplx tc = detail::unit(direction_at(c.pieces[cj.piece], cj.s));
      if (std::abs(tc - std::conj(tk)) > std::abs(tc + std::conj(tk))) Gc = inverse2(Gc);

      Mat2 Gn = pb.jump[ng.piece](-k);
      cplx tn = detail::unit(direction_at(c.pieces[ng.piece], ng.s));
      if (std::abs(tn + tk) < std::abs(tn - tk)) Gn = inverse2(Gn);

      Mat2 cGc = Gc.conjugate();
      rep.conjugation = std::max(rep.conjugation, max_abs(cGc - Gn));
      rep.inverse = std::max(rep.inverse, max_abs(inverse2(G) - s2 * cGc * s2));
    }
  }
  return rep;
}

// Full output of one pointwise reconstruction.
struct Reconstruction {
  double q = 0.0;
  double imag = 0.0;      // imaginary part discarded from q
  double residual = 0.0;  // collocation residual of the RHP
  double residual_x = 0.0;
  double condition = 0.0;
  std::size_t pieces = 0;
  int unknowns = 0;
};

inline Reconstruction reconstruct(const Scenario &sc, double x, double t, const Layout &L) {
  Reconstruction r;
  if (sc.empty()) return r;
  RHProblem pb = compose(sc, x, t, L);
  RHSolution sol = solve(pb);
  RHSolution dx = solve_x_derivative(sol, pb);
  if (!(dx.residual <= pb.max_residual))
    fail(ErrorKind::solver, "x-derivative residual " + std::to_string(dx.residual) + " at " + pb.label);
  MatC s1x = asymptotic_coefficient(dx, pb.contour);
  cplx q = 2.0 * I * s1x(0, 0);
  r.q = q.real();
  r.imag = q.imag();
  r.residual = sol.residual;
  r.residual_x = dx.residual;
  r.condition = sol.condition;
  r.pieces = pb.contour.size();
  r.unknowns = int(sol.system->A.cols());
  if (!(std::abs(q.imag()) < 1e-8))
    fail(ErrorKind::solver, "reconstructed q has imaginary part " + std::to_string(q.imag()) + " at " + pb.label);
  return r;
}

inline Reconstruction reconstruct(const Scenario &sc, double x, double t) { return reconstruct(sc, x, t, layout(sc, x, t)); }

// q(x,t) = first entry of 2i lim k (d/dx Phi)(k) sigma3
inline double reconstruct_q(const Scenario &sc, double x, double t) { return reconstruct(sc, x, t).q; }

struct LaxResidual {
  double r1 = 0.0, r2 = 0.0;
};

struct LaxOptions {
  double hx = 1e-4; // step for Phi_xx (from the exact Phi_x) and Q_x
  double ht = 0.0;  // step for Phi_t; 0 picks one from the fastest time frequency 4k^3 of the scenario
};

namespace detail {

struct PhiData {
  RowC phi, phix;
  double q = 0.0;
};

inline PhiData phi_data(const Scenario &sc, double x, double t, cplx k, const Layout &L) {
  PhiData d;
  d.phi = RowC::Ones(2);
  d.phix = RowC::Zero(2);
  if (sc.empty()) return d;
  RHProblem pb = compose(sc, x, t, L);
  if (distance_to_contour(pb.contour, k) <= 0.1)
    fail(ErrorKind::invalid_argument, "lax_residual: k must stay at distance > 0.1 from the contour");
  RHSolution sol = solve(pb);
  RHSolution dx = solve_x_derivative(sol, pb);
  d.phi = evaluate_phi(sol, pb, k).row(0);
  d.phix = evaluate_phi(dx, pb, k).row(0);
  d.q = (2.0 * I * asymptotic_coefficient(dx, pb.contour)(0, 0)).real();
  return d;
}

// fourth-order central difference weights for the first derivative
inline RowC fd5(const std::array<RowC, 4> &v, double h) {
  return (v[0] - 8.0 * v[1] + 8.0 * v[2] - v[3]) / (12.0 * h);
}

} // namespace detail

// Residual norms of the two Lax equations at k, with the layout frozen at (x,t) so all stencil
// points share one discretization.
inline LaxResidual lax_residual(const Scenario &sc, double x, double t, cplx k, LaxOptions opt = {}) {
  Layout L = layout(sc, x, t);
  if (!(opt.ht > 0)) {
    double kmax = 1.0;
    if (sc.has_genus()) kmax = std::max(kmax, sc.genus->bands.back()[1]);
    if (sc.has_reflection()) kmax = std::max(kmax, sc.reflection->truncation());
    if (sc.has_solitons()) kmax = std::max(kmax, sc.solitons.kappa.back());
    opt.ht = 1e-4 * std::min(1.0, std::pow(2.5 / kmax, 3));
  }
  auto at = [&](double xx, double tt) { return detail::phi_data(sc, xx, tt, k, L); };
  auto c = at(x, t);
  std::array<RowC, 4> px, pt;
  std::array<double, 4> qx;
  const double off[4] = {-2, -1, 1, 2};
  for (int j = 0; j < 4; ++j) {
    auto d = at(x + off[j] * opt.hx, t);
    px[j] = d.phix;
    qx[j] = d.q;
    pt[j] = at(x, t + off[j] * opt.ht).phi;
  }
  RowC phixx = detail::fd5(px, opt.hx), phit = detail::fd5(pt, opt.ht);
  double Qx = (qx[0] - 8 * qx[1] + 8 * qx[2] - qx[3]) / (12 * opt.hx);
  RowC s3phi = c.phi, s3phix = c.phix;
  s3phi[1] = -s3phi[1];
  s3phix[1] = -s3phix[1];
  double Q = c.q;
  RowC e1 = -phixx + 2.0 * I * k * s3phix - Q * c.phi;
  RowC e2 = -phit + 4.0 * I * k * k * k * s3phi - (2.0 * Q - 4.0 * k * k) * (c.phix - I * k * s3phi) + Qx * c.phi;
  return {e1.cwiseAbs().maxCoeff(), e2.cwiseAbs().maxCoeff()};
}

} // namespace rhkdv
