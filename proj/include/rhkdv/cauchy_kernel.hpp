#pragma once

#include <optional>

#include "geometry.hpp"

namespace rhkdv {

// Reference-interval machinery. Densities on [-1,1] are T_n(s) (plain) or w(s)T_n(s) with the
// quarter weights w = ((1-s)/(1+s))^{+-1/4} (band families). Their Cauchy transforms are written
// through the inverse Joukowski variable J(z) = z + sqrt(z-1)sqrt(z+1), |J| > 1 off [-1,1].
namespace ref {

enum class Family { plain, wplus, wminus };

inline double alpha(Family f) { return f == Family::wplus ? 0.25 : -0.25; }

inline cplx scale(Family f) {
  if (f == Family::plain) return 2.0 * pi * I;
  return 2.0 * I * std::sin(pi * alpha(f));
}

// Laurent coefficients of h(J) in powers of 1/J
inline std::vector<cplx> laurent(Family f, int m) {
  std::vector<cplx> h(std::max(m, 2), 0.0);
  if (f == Family::plain) {
    for (int j = 1; j < m; j += 2) h[j] = -4.0 / j;
  } else {
    double beta = 2 * alpha(f);
    h[0] = 1.0;
    h[1] = -2 * beta;
    for (int j = 1; j + 1 < m; ++j) h[j + 1] = (-2 * beta * h[j] + double(j - 1) * h[j - 1]) / double(j + 1);
  }
  h.resize(m);
  return h;
}

inline cplx hfun(Family f, cplx J) {
  cplx L = std::log(1.0 - 1.0 / J) - std::log(1.0 + 1.0 / J);
  if (f == Family::plain) return 2.0 * L;
  return std::exp(2 * alpha(f) * L);
}

inline cplx joukowski_inverse(cplx z) {
  cplx J = z + std::sqrt(z - 1.0) * std::sqrt(z + 1.0);
  if (std::abs(J) < 1.0) J = 1.0 / J;
  return J;
}

// Unscaled mode values R_0..R_{N-1} for given J and h(J); see header comment.
inline void modes(Family f, int N, cplx J, cplx hval, const std::vector<cplx> &h, cplx *out) {
  if (N == 0) return;
  double aJ = std::abs(J);
  cplx A;
  if (std::pow(aJ, N) < 1e3) {
    cplx Jinv = 1.0 / J, p = 1.0, s = hval;
    for (int m = 0; m < N; ++m) {
      s -= h[m] * p;
      p *= Jinv;
    }
    A = std::pow(J, N - 1) * s;
  } else {
    int P = int(40.0 / std::log(aJ)) + 5;
    std::vector<cplx> hh = laurent(f, N + P + 1);
    cplx Jinv = 1.0 / J, p = Jinv;
    A = 0.0;
    for (int q = 1; q <= P; ++q) {
      A += hh[N - 1 + q] * p;
      p *= Jinv;
    }
  }
  // multiply by 1/J rather than divide: libgcc's checked complex division dominates otherwise
  cplx Ji = 1.0 / J;
  std::vector<cplx> As(N);
  As[N - 1] = A;
  for (int m = N - 1; m > 0; --m) As[m - 1] = (h[m] + As[m]) * Ji;
  cplx C = 0.0, Jn = 1.0;
  out[0] = hval - h[0];
  for (int m = 1; m < N; ++m) {
    C = (h[m - 1] + C) * Ji;
    Jn *= Ji;
    out[m] = 0.5 * (As[m] + hval * Jn - C);
  }
}

// Cauchy transforms of the N modes at zeta off [-1,1]
inline void off(Family f, int N, cplx zeta, cplx *out) {
  cplx J = joukowski_inverse(zeta);
  std::vector<cplx> h = laurent(f, N + 1);
  modes(f, N, J, hfun(f, J), h, out);
  cplx s = 1.0 / scale(f);
  for (int m = 0; m < N; ++m) out[m] *= s;
}

// Boundary values from the left (+1) or right (-1) of [-1,1] at a real point sig.
inline void boundary(Family f, int N, double sig, int side, cplx *out) {
  double r = std::sqrt(std::max(0.0, 1.0 - sig * sig));
  cplx J(sig, side * r);
  cplx hv;
  if (f == Family::plain) {
    if (std::abs(sig - 1.0) < 1e-15) hv = cplx(-std::log(2.0), side * pi);
    else if (std::abs(sig + 1.0) < 1e-15) hv = cplx(std::log(2.0), side * pi);
    else hv = cplx(std::log((1 - sig) / (1 + sig)), side * pi);
  } else {
    double a = alpha(f);
    hv = std::pow((1 - sig) / (1 + sig), a) * std::exp(I * double(side) * pi * a);
  }
  std::vector<cplx> h = laurent(f, N + 1);
  modes(f, N, J, hv, h, out);
  cplx s = 1.0 / scale(f);
  for (int m = 0; m < N; ++m) out[m] *= s;
}

// lim_{z->inf} z C[mode_n](z) on the reference interval
inline void moment(Family f, int N, cplx *out) {
  std::vector<cplx> h = laurent(f, N + 2);
  cplx s = scale(f);
  for (int m = 0; m < N; ++m) {
    cplx r1 = m == 0 ? h[1] : m == 1 ? h[2] / 2.0 : (h[m + 1] - h[m - 1]) / 2.0;
    out[m] = r1 / 2.0 / s;
  }
}

inline double weight(Family f, double sig) {
  if (f == Family::plain) return 1.0;
  return std::pow((1 - sig) / (1 + sig), alpha(f));
}

} // namespace ref

// Fourier modes of closed curves in FFT order: 0,1,..,n/2-1,-n/2,..,-1. For even n the
// -n/2 slot holds cos(pi n s) rather than a single exponential, so that the basis is closed
// under s -> -s and under conjugation.
inline int fourier_mode(int j, int n) { return j < (n + 1) / 2 ? j : j - n; }
inline bool is_nyquist(int j, int n) { return n % 2 == 0 && j == n / 2; }

// Number of coefficients a density carries on a piece (equal to n for every kind).
inline int coefficient_count(const ContourPiece &p) { return p.n; }

// Values of the basis functions at reference coordinate s (segment: [-1,1]; closed: [0,1)).
inline RowC basis_row(const ContourPiece &p, double s) {
  RowC r(p.n);
  if (p.kind == PieceKind::segment) {
    double th = std::acos(std::clamp(s, -1.0, 1.0));
    if (p.basis == SegmentBasis::chebyshev) {
      for (int m = 0; m < p.n; ++m) r[m] = std::cos(m * th);
    } else {
      int h = p.n / 2;
      double w = ref::weight(ref::Family::wplus, s);
      for (int m = 0; m < h; ++m) {
        double T = std::cos(m * th);
        r[m] = w * T;
        r[h + m] = T / w;
      }
    }
  } else {
    for (int m = 0; m < p.n; ++m)
      r[m] = is_nyquist(m, p.n) ? cplx(std::cos(pi * p.n * s))
                                : std::exp(2.0 * pi * I * double(fourier_mode(m, p.n)) * s);
  }
  return r;
}

inline MatC basis_matrix(const ContourPiece &p) {
  MatC B(p.n, p.n);
  for (int j = 0; j < p.n; ++j) B.row(j) = basis_row(p, p.ref[j]);
  return B;
}

namespace detail {

inline ref::Family segment_family(const ContourPiece &p, int part) {
  if (p.basis == SegmentBasis::chebyshev) return ref::Family::plain;
  return part == 0 ? ref::Family::wplus : ref::Family::wminus;
}

inline RowC segment_off(const ContourPiece &p, cplx z) {
  cplx zeta = (z - p.mid()) / p.half();
  RowC r(p.n);
  if (p.basis == SegmentBasis::chebyshev) {
    ref::off(ref::Family::plain, p.n, zeta, r.data());
  } else {
    int h = p.n / 2;
    ref::off(ref::Family::wplus, h, zeta, r.data());
    ref::off(ref::Family::wminus, h, zeta, r.data() + h);
  }
  return r;
}

inline RowC segment_boundary(const ContourPiece &p, double sig, int side) {
  RowC r(p.n);
  if (p.basis == SegmentBasis::chebyshev) {
    ref::boundary(ref::Family::plain, p.n, sig, side, r.data());
  } else {
    int h = p.n / 2;
    ref::boundary(ref::Family::wplus, h, sig, side, r.data());
    ref::boundary(ref::Family::wminus, h, sig, side, r.data() + h);
  }
  return r;
}

// winding number of a closed piece around z (0 outside, +-1 inside)
inline int winding(const ContourPiece &p, cplx z) {
  if (p.kind == PieceKind::circle) return std::abs(z - p.center) < p.radius ? p.orientation : 0;
  cplx d = z - p.center;
  double v = std::pow(d.real() / p.rx, 2) + std::pow(d.imag() / p.ry, 2);
  return v < 1.0 ? p.orientation : 0;
}

inline RowC circle_off(const ContourPiece &p, cplx z) {
  // on the curve zeta = exp(2 pi i o s), so parameter mode m is zeta^{o m}
  cplx zeta = (z - p.center) / p.radius;
  bool inside = std::abs(zeta) < 1.0;
  RowC r = RowC::Zero(p.n);
  for (int j = 0; j < p.n; ++j) {
    if (is_nyquist(j, p.n)) {
      int h = p.n / 2;
      r[j] = inside ? 0.5 * std::pow(zeta, h) : -0.5 * std::pow(zeta, -h);
      continue;
    }
    int m = fourier_mode(j, p.n) * p.orientation;
    if (inside && m >= 0) r[j] = std::pow(zeta, m);
    if (!inside && m < 0) r[j] = -std::pow(zeta, m);
  }
  return double(p.orientation) * r;
}

inline int ellipse_oversampling(const ContourPiece &p) {
  double aspect = std::max(p.rx, p.ry) / std::min(p.rx, p.ry);
  return std::max(1, int(std::ceil(1.5 * aspect)));
}

// s-derivative of order d of the closed-curve basis functions
inline RowC closed_basis_derivative(const ContourPiece &p, double s, int d) {
  RowC r(p.n);
  for (int m = 0; m < p.n; ++m) {
    if (is_nyquist(m, p.n)) {
      // cos(w s) differentiated d times
      double w = pi * p.n;
      double v = (d % 2 == 0) ? std::cos(w * s) : std::sin(w * s);
      double sign = (d % 4 == 1 || d % 4 == 2) ? -1.0 : 1.0;
      r[m] = sign * std::pow(w, d) * v;
    } else {
      cplx f = 2.0 * pi * I * double(fourier_mode(m, p.n));
      r[m] = std::pow(f, d) * std::exp(f * s);
    }
  }
  return r;
}

inline cplx ellipse_d2gamma(const ContourPiece &p, double s) {
  double w = 2 * pi;
  return -w * w * (p.rx * std::cos(w * s) + I * double(p.orientation) * p.ry * std::sin(w * s));
}

// Trapezoid rule after subtracting the quadratic Taylor polynomial of the density, written
// in powers of (gamma - gamma*), about the nearest curve point. The subtracted polynomial is
// integrated exactly: the integral of (gamma-gamma*)^m / (gamma - z) dgamma is
// 2 pi i w (z - gamma*)^m, with w the winding number.
inline RowC ellipse_off(const ContourPiece &p, cplx z) {
  double d = p.distance(z);
  const int scan = 512;
  double sbest = 0, dbest = std::numeric_limits<double>::infinity();
  for (int j = 0; j < scan; ++j) {
    double s = double(j) / scan, dd = std::abs(p.gamma(s) - z);
    if (dd < dbest) dbest = dd, sbest = s;
  }
  {
    double lo = sbest - 1.0 / scan, hi = sbest + 1.0 / scan;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 50; ++it) {
      double s1 = hi - g * (hi - lo), s2 = lo + g * (hi - lo);
      if (std::abs(p.gamma(s1) - z) < std::abs(p.gamma(s2) - z)) hi = s2;
      else lo = s1;
    }
    sbest = 0.5 * (lo + hi);
  }
  double speed = std::abs(p.dgamma(sbest));
  int N = std::max(p.n * ellipse_oversampling(p), int(std::ceil(40.0 * speed / (2 * pi * std::max(d, 1e-14)))));
  N = std::min(N, 1 << 15);

  // Taylor data in the variable gamma: u0, du/dgamma, d2u/dgamma2
  cplx g0 = p.gamma(sbest), g1 = p.dgamma(sbest), g2 = ellipse_d2gamma(p, sbest);
  RowC u0 = basis_row(p, sbest);
  RowC us = closed_basis_derivative(p, sbest, 1), uss = closed_basis_derivative(p, sbest, 2);
  RowC du = us / g1;
  RowC d2u = (uss * g1 - us * g2) / (g1 * g1 * g1);

  RowC r = RowC::Zero(p.n);
  cplx w0 = 0.0, w1 = 0.0, w2 = 0.0;
  for (int l = 0; l < N; ++l) {
    double s = double(l) / N;
    cplx gs = p.gamma(s);
    cplx w = p.dgamma(s) / (gs - z) / (2.0 * pi * I * double(N));
    cplx e = gs - g0;
    w0 += w;
    w1 += w * e;
    w2 += w * e * e;
    r += w * basis_row(p, s);
  }
  r -= w0 * u0 + w1 * du + 0.5 * w2 * d2u;
  double wind = winding(p, z);
  cplx e = z - g0;
  r += wind * (u0 + e * du + 0.5 * e * e * d2u);
  return r;
}

} // namespace detail

// Row of Cauchy transforms of the basis functions of piece p at z (z off p).
inline RowC cauchy_row(const ContourPiece &p, cplx z) {
  switch (p.kind) {
  case PieceKind::segment: return detail::segment_off(p, z);
  case PieceKind::circle: return detail::circle_off(p, z);
  case PieceKind::ellipse: return detail::ellipse_off(p, z);
  }
  return {};
}

// Boundary values C^{side} of the basis functions at reference coordinate s of the piece
// itself. side = +1 is the left of the orientation.
inline RowC boundary_row(const ContourPiece &p, double s, int side) {
  if (p.kind == PieceKind::segment) return detail::segment_boundary(p, s, side);
  RowC B = basis_row(p, s);
  RowC r(p.n);
  if (p.kind == PieceKind::circle) {
    // left of a counter-clockwise circle is the inside
    for (int c = 0; c < p.n; ++c) {
      if (is_nyquist(c, p.n)) {
        r[c] = 0.5 * double(side) * B[c];
        continue;
      }
      int m = fourier_mode(c, p.n) * p.orientation;
      bool plus_part = p.orientation > 0 ? m >= 0 : m < 0;
      r[c] = (side > 0) == plus_part ? double(side) * B[c] : cplx(0.0);
    }
    return r;
  }
  // ellipse: C^+ = (1+o)/2 u(s) + (1/2 pi i) int (u - u(s)) dgamma/(gamma - gamma(s)), by the
  // trapezoid rule on an oversampled grid through s; the excluded grid point contributes u'(s)
  int N = p.n * detail::ellipse_oversampling(p);
  cplx g0 = p.gamma(s);
  RowC row = RowC::Zero(p.n);
  cplx wsum = 0.0;
  for (int l = 1; l < N; ++l) {
    double sl = s + double(l) / N;
    cplx w = p.dgamma(sl) / (p.gamma(sl) - g0);
    wsum += w;
    row += w * basis_row(p, sl);
  }
  RowC deriv = detail::closed_basis_derivative(p, s, 1);
  r = (row - wsum * B + deriv) / (2.0 * pi * I * double(N));
  r += 0.5 * double(1 + p.orientation) * B;
  if (side < 0) r -= B;
  return r;
}

// Boundary values at the piece's own nodes (n x n).
inline MatC boundary_matrix(const ContourPiece &p, int side) {
  MatC M(p.n, p.n);
  for (int j = 0; j < p.n; ++j) M.row(j) = boundary_row(p, p.ref[j], side);
  return M;
}

// lim_{k->inf} k C[basis](k)
inline RowC moment_row(const ContourPiece &p) {
  RowC r(p.n);
  if (p.kind == PieceKind::segment) {
    if (p.basis == SegmentBasis::chebyshev) {
      ref::moment(ref::Family::plain, p.n, r.data());
    } else {
      int h = p.n / 2;
      ref::moment(ref::Family::wplus, h, r.data());
      ref::moment(ref::Family::wminus, h, r.data() + h);
    }
    return p.half() * r;
  }
  // -(1/2 pi i) int u dgamma, trapezoid exact for the trigonometric integrand
  r.setZero();
  for (int l = 0; l < p.n; ++l) r += p.dgamma(p.ref[l]) * basis_row(p, p.ref[l]);
  return -r / (2.0 * pi * I * double(p.n));
}

// Coefficients <-> nodal values on a piece
inline MatC values_to_coefficients(const ContourPiece &p) { return basis_matrix(p).inverse(); }

struct Density {
  int width = 1;             // number of components carried
  std::vector<MatC> coeffs;  // per piece: n x width

  static Density zeros(const Contour &c, int width) {
    Density d;
    d.width = width;
    for (const auto &p : c.pieces) d.coeffs.push_back(MatC::Zero(coefficient_count(p), width));
    return d;
  }
};

inline void check_density(const Density &u, const Contour &c) {
  require(u.coeffs.size() == c.size(), "density: piece count does not match contour");
  for (std::size_t i = 0; i < c.size(); ++i) {
    require(u.coeffs[i].rows() == coefficient_count(c.pieces[i]), "density: coefficient count differs from n");
    require(u.coeffs[i].cols() == u.width, "density: width mismatch");
    require(u.coeffs[i].allFinite(), "density: non-finite coefficient");
  }
}

// Density from nodal values (per piece n x width)
inline Density density_from_values(const Contour &c, const std::vector<MatC> &values) {
  Density d;
  d.width = values.empty() ? 1 : int(values[0].cols());
  for (std::size_t i = 0; i < c.size(); ++i) d.coeffs.push_back(basis_matrix(c.pieces[i]).partialPivLu().solve(values[i]));
  return d;
}

inline RowC density_values_at(const Density &u, const ContourPiece &p, std::size_t i, double s) {
  return basis_row(p, s) * u.coeffs[i];
}

// C[u](k) for k off the contour
inline RowC cauchy_eval(const Density &u, const Contour &c, cplx k, double tol = 1e-10) {
  check_density(u, c);
  if (distance_to_contour(c, k) < tol) fail(ErrorKind::invalid_argument, "cauchy_eval: point lies on the contour");
  RowC r = RowC::Zero(u.width);
  for (std::size_t i = 0; i < c.size(); ++i) r += cauchy_row(c.pieces[i], k) * u.coeffs[i];
  return r;
}

// C^{side}[u] at the nodes of every piece; one (n x width) block per piece
inline std::vector<MatC> cauchy_boundary(const Density &u, const Contour &c, int side) {
  check_density(u, c);
  std::vector<MatC> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto &p = c.pieces[i];
    MatC v = boundary_matrix(p, side) * u.coeffs[i];
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (j == i) continue;
      for (int l = 0; l < p.n; ++l) v.row(l) += cauchy_row(c.pieces[j], p.nodes[l]) * u.coeffs[j];
    }
    out.push_back(v);
  }
  return out;
}

inline RowC first_moment(const Density &u, const Contour &c) {
  check_density(u, c);
  RowC r = RowC::Zero(u.width);
  for (std::size_t i = 0; i < c.size(); ++i) r += moment_row(c.pieces[i]) * u.coeffs[i];
  return r;
}

} // namespace rhkdv
