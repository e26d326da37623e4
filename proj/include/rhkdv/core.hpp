#pragma once

#include <complex>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rhkdv {

using cplx = std::complex<double>;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using RowC = Eigen::RowVectorXcd;
using Mat2 = Eigen::Matrix2cd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I{0.0, 1.0};

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { invalid_argument, parse, solver, incompatible, symmetry };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &msg) { throw Error(kind, msg); }

inline void require(bool cond, const std::string &msg) {
  if (!cond) fail(ErrorKind::invalid_argument, msg);
}

// sigma_2 is taken as antidiag(1,1) here, not the usual Pauli matrix.
inline Mat2 sigma2() {
  Mat2 m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

inline Mat2 sigma3() {
  Mat2 m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

inline Mat2 identity2() { return Mat2::Identity(); }

inline Mat2 inverse2(const Mat2 &m) {
  cplx d = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  Mat2 r;
  r << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return r / d;
}

inline double max_abs(const Mat2 &m) { return m.cwiseAbs().maxCoeff(); }

inline bool all_finite(const VecC &v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  return true;
}

} // namespace rhkdv
