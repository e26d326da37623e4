#pragma once

#include <functional>

#include "geometry.hpp"

namespace rhkdv {

namespace quad {

// One Gauss-Kronrod 7/15 panel; returns the Kronrod estimate and the Gauss-Kronrod difference.
template <class F> cplx gk15(const F &f, double a, double b, double *err) {
  static const double xk[8] = {0.991455371120812639, 0.949107912342758525, 0.864864423359769073,
                               0.741531185599394440, 0.586087235467691130, 0.405845151377397167,
                               0.207784955007898468, 0.0};
  static const double wk[8] = {0.022935322010529225, 0.063092092629978553, 0.104790010322250184,
                               0.140653259715525919, 0.169004726639267903, 0.190350578064785410,
                               0.204432940075298892, 0.209482141084727828};
  static const double wg[4] = {0.129484966168869693, 0.279705391489276668, 0.381830050505118945,
                               0.417959183673469388};
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cplx fc = f(c);
  cplx rk = fc * wk[7], rg = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    cplx f1 = f(c - h * xk[j]), f2 = f(c + h * xk[j]);
    rk += wk[j] * (f1 + f2);
    if (j % 2 == 1) rg += wg[j / 2] * (f1 + f2);
  }
  *err = std::abs((rk - rg) * h);
  return rk * h;
}

// Adaptive bisection until each panel meets its share of the absolute tolerance.
template <class F> cplx adaptive(const F &f, double a, double b, double tol, int depth = 0) {
  double err;
  cplx r = gk15(f, a, b, &err);
  if (err <= std::max(tol, 1e-16 * std::abs(r)) || depth > 40) return r;
  double m = 0.5 * (a + b);
  return adaptive(f, a, m, 0.5 * tol, depth + 1) + adaptive(f, m, b, 0.5 * tol, depth + 1);
}

} // namespace quad

// ---------------------------------------------------------------------------------------------
// Airy function

namespace detail {

inline double airy_maclaurin(double z) {
  const long double c1 = 0.355028053887817239260L, c2 = 0.258819403792806798405L;
  long double z3 = (long double)z * z * z, f = 1, g = z, sf = 1, sg = z;
  for (int k = 1; k < 300; ++k) {
    f *= z3 / ((3.0L * k - 1) * (3.0L * k));
    g *= z3 / ((3.0L * k) * (3.0L * k + 1));
    sf += f;
    sg += g;
    if (std::fabs(f) + std::fabs(g) < 1e-24L * (std::fabs(sf) + std::fabs(sg))) break;
  }
  return double(c1 * sf - c2 * sg);
}

// Large-|z| branch through the Bessel-function representations of Ai.
inline double airy_bessel(double z) {
  if (z > 0) {
    double zeta = 2.0 / 3.0 * z * std::sqrt(z);
    return std::sqrt(z / 3.0) / pi * std::cyl_bessel_k(1.0 / 3.0, zeta);
  }
  double a = -z, zeta = 2.0 / 3.0 * a * std::sqrt(a);
  double j = std::cyl_bessel_j(1.0 / 3.0, zeta), y = std::cyl_neumann(1.0 / 3.0, zeta);
  double jm = 0.5 * j - 0.5 * std::sqrt(3.0) * y; // J_{-1/3}
  return std::sqrt(a) / 3.0 * (j + jm);
}

} // namespace detail

// Ai(z) on the real line: power series for |z| <= 5, Bessel representation beyond.
inline double airy_ai(double z) {
  if (!std::isfinite(z)) fail(ErrorKind::invalid_argument, "airy_ai: argument must be finite");
  return std::abs(z) <= 5.0 ? detail::airy_maclaurin(z) : detail::airy_bessel(z);
}

struct AiryCheck {
  cplx contour;     // int e^{ikx + ik^3 t} dk along the rotated rays
  double reference; // 2 pi (3t)^{-1/3} Ai(x (3t)^{-1/3})
  double difference() const { return std::abs(contour - reference); }
};

// The real line is rotated onto the rays arg k = pi/6 and 5 pi/6, where e^{ik^3 t} = e^{-r^3 t}.
inline AiryCheck airy_identity(double x, double t) {
  if (!(t > 0)) fail(ErrorKind::invalid_argument, "airy_identity: t must be positive");
  cplx e1 = std::exp(I * (pi / 6)), e2 = std::exp(I * (5 * pi / 6));
  auto f = [&](double r) {
    cplx k1 = r * e1, k2 = r * e2;
    return e1 * std::exp(I * k1 * x + I * k1 * k1 * k1 * t) - e2 * std::exp(I * k2 * x + I * k2 * k2 * k2 * t);
  };
  // e^{-r^3 t + r |x|} < 1e-18 beyond R
  double R = 1.0;
  while (-R * R * R * t + R * std::abs(x) > -42.0) R *= 1.25;
  double s = std::cbrt(3 * t);
  AiryCheck c;
  c.contour = quad::adaptive(f, 0.0, R, 1e-13);
  c.reference = 2 * pi / s * airy_ai(x / s);
  return c;
}

// ---------------------------------------------------------------------------------------------
// Linear problem q_t + q_xxx = 0 in Ehrenpreis form

struct EhrenpreisData {
  std::function<cplx(cplx)> f;
  std::vector<ContourPiece> contour; // segments are integrated a -> b, closed pieces once around
};

// int_Gamma f(k) e^{ikx + ik^3 t} dk by adaptive quadrature (absolute tolerance 1e-10).
// Segment pieces are truncations of infinite contours: the integrand must have decayed at any
// endpoint that is not shared with another piece.
inline cplx linear_solution(const EhrenpreisData &d, double x, double t) {
  if (!d.f) return 0.0;
  auto g = [&](cplx k) { return d.f(k) * std::exp(I * k * x + I * k * k * k * t); };
  cplx sum = 0.0;
  double tol = 1e-10 / std::max<std::size_t>(1, d.contour.size());
  for (const auto &p : d.contour) {
    if (p.kind == PieceKind::segment) {
      for (cplx e : {p.a, p.b}) {
        bool shared = false;
        for (const auto &q : d.contour)
          if (&q != &p && q.kind == PieceKind::segment && (std::abs(q.a - e) < 1e-14 || std::abs(q.b - e) < 1e-14))
            shared = true;
        if (!shared && std::abs(g(e)) > 1e-12)
          fail(ErrorKind::invalid_argument, "linear_solution: integrand does not decay at the end of the contour");
      }
      cplx dk = p.b - p.a;
      sum += quad::adaptive([&](double s) { return g(p.a + dk * s) * dk; }, 0.0, 1.0, tol);
    } else {
      sum += quad::adaptive([&](double s) { return g(p.gamma(s)) * p.dgamma(s); }, 0.0, 1.0, tol);
    }
  }
  return sum;
}

// ---------------------------------------------------------------------------------------------
// Exact N-soliton solution of q_t + 6 q q_x + q_xxx = 0

// q = 2 d^2/dx^2 log det(I + A), A_ij = 2 sqrt(kappa_i kappa_j)/(kappa_i + kappa_j) e_i e_j,
// e_i = exp(-kappa_i (x - 4 kappa_i^2 t + phi_i)); the derivatives of A are taken analytically.
inline double nsoliton_exact(const std::vector<double> &kappa, const std::vector<double> &phi, double x, double t) {
  std::size_t n = kappa.size();
  if (phi.size() != n) fail(ErrorKind::invalid_argument, "nsoliton_exact: one phase per soliton required");
  for (std::size_t j = 0; j < n; ++j) {
    if (!(kappa[j] > 0)) fail(ErrorKind::invalid_argument, "nsoliton_exact: kappa must be positive");
    if (j > 0 && !(kappa[j] > kappa[j - 1])) fail(ErrorKind::invalid_argument, "nsoliton_exact: kappa must be strictly increasing");
  }
  if (n == 0) return 0.0;
  using M = Eigen::MatrixXd;
  M A(n, n), A1(n, n), A2(n, n);
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = std::exp(-kappa[i] * (x - 4 * kappa[i] * kappa[i] * t + phi[i]));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = kappa[i] + kappa[j];
      double a = 2 * std::sqrt(kappa[i] * kappa[j]) / s * e[i] * e[j];
      A(i, j) = (i == j ? 1.0 : 0.0) + a;
      A1(i, j) = -s * a;
      A2(i, j) = s * s * a;
    }
  Eigen::PartialPivLU<M> lu(A);
  M B1 = lu.solve(A1), B2 = lu.solve(A2);
  return 2.0 * (B2.trace() - (B1 * B1).trace());
}

// ---------------------------------------------------------------------------------------------
// Elliptic functions and the cnoidal wave

// Complete elliptic integral of the first kind, parameter m = k^2.
inline double ellipk(double m) {
  if (!(m >= 0 && m < 1)) fail(ErrorKind::invalid_argument, "ellipk: parameter must lie in [0,1)");
  double a = 1, b = std::sqrt(1 - m);
  for (int i = 0; i < 60 && std::abs(a - b) > 1e-16 * a; ++i) {
    double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return pi / (2 * a);
}

struct Jacobi {
  double sn, cn, dn;
};

// Jacobi elliptic functions by the descending AGM (Landen) recurrence.
inline Jacobi jacobi(double u, double m) {
  if (!(m >= 0 && m < 1)) fail(ErrorKind::invalid_argument, "jacobi: parameter must lie in [0,1)");
  if (m < 1e-300) return {std::sin(u), std::cos(u), 1.0};
  double a[64], c[64];
  a[0] = 1;
  double b = std::sqrt(1 - m);
  c[0] = std::sqrt(m);
  int N = 0;
  while (std::abs(c[N]) > 1e-16 && N < 62) {
    a[N + 1] = 0.5 * (a[N] + b);
    c[N + 1] = 0.5 * (a[N] - b);
    b = std::sqrt(a[N] * b);
    ++N;
  }
  double phi = std::ldexp(a[N] * u, N);
  for (int j = N; j > 0; --j) phi = 0.5 * (phi + std::asin(c[j] / a[j] * std::sin(phi)));
  double sn = std::sin(phi), cn = std::cos(phi);
  return {sn, cn, std::sqrt(1 - m * sn * sn)};
}

// q = a + 2 m k^2 cn^2(k (x - v t - x0) | m), v = 6 a + 4 k^2 (2m - 1).
struct CnoidalParams {
  double m = 0.5;   // elliptic parameter in [0,1)
  double k = 1.0;   // wavenumber scale
  double a = 0.0;   // background level
  double x0 = 0.0;  // crest position at t = 0
  double speed() const { return 6 * a + 4 * k * k * (2 * m - 1); }
  double period() const { return 2 * ellipk(m) / k; }
};

inline double cnoidal_exact(const CnoidalParams &p, double x, double t) {
  if (!(p.m >= 0 && p.m < 1)) fail(ErrorKind::invalid_argument, "cnoidal_exact: modulus parameter must lie in [0,1)");
  if (!(p.k > 0)) fail(ErrorKind::invalid_argument, "cnoidal_exact: wavenumber must be positive");
  double cn = jacobi(p.k * (x - p.speed() * t - p.x0), p.m).cn;
  return p.a + 2 * p.m * p.k * p.k * cn * cn;
}

} // namespace rhkdv
