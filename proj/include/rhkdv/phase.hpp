#pragma once

#include <optional>

#include "core.hpp"

namespace rhkdv {

// theta(k) = i k x + 4 i k^3 t
inline cplx theta(cplx k, double x, double t) { return I * k * x + 4.0 * I * k * k * k * t; }

struct ThetaPhase {
  double x = 0, t = 0;
  cplx operator()(cplx k) const { return theta(k, x, t); }
  cplx dk(cplx k) const { return I * x + 12.0 * I * k * k * t; }
  cplx dx(cplx k) const { return I * k; }
};

// Real stationary point k0 >= 0 of exp(theta), when one exists.
inline std::optional<double> stationary_point(double x, double t) {
  if (t == 0.0) fail(ErrorKind::invalid_argument, "stationary_point: t must be nonzero");
  double r = -x / (12.0 * t);
  if (r < 0) return std::nullopt;
  return std::sqrt(r);
}

// e^{-theta sigma3} V e^{theta sigma3}
inline Mat2 conjugate_by_theta(const Mat2 &V, cplx th) {
  Mat2 G = V;
  G(0, 1) *= std::exp(-2.0 * th);
  G(1, 0) *= std::exp(2.0 * th);
  return G;
}

// d/dx of e^{-theta sigma3} V e^{theta sigma3} for x-independent V
inline Mat2 x_derivative_of_conjugated(const Mat2 &G, cplx k) {
  Mat2 s3 = sigma3();
  return -I * k * (s3 * G - G * s3);
}

} // namespace rhkdv
