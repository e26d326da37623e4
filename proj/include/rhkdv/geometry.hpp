#pragma once

#include <algorithm>
#include <limits>
#include <sstream>

#include "core.hpp"

namespace rhkdv {

enum class PieceKind { segment, circle, ellipse };

// Segments carry either plain Chebyshev densities (second-kind nodes, endpoints included)
// or the two-family quarter-weight densities used on spectral bands (first-kind nodes).
enum class SegmentBasis { chebyshev, band };

struct ContourPiece {
  PieceKind kind = PieceKind::segment;
  SegmentBasis basis = SegmentBasis::chebyshev;
  cplx a{}, b{};     // segment endpoints, oriented a -> b
  cplx center{};     // closed curves
  double radius = 0; // circle
  double rx = 0, ry = 0;
  int orientation = 1; // +1 counter-clockwise, -1 clockwise (closed curves only)
  int n = 0;

  std::vector<cplx> nodes;
  std::vector<double> ref; // segment: reference coordinate in [-1,1]; closed: parameter in [0,1)

  bool closed() const { return kind != PieceKind::segment; }
  cplx mid() const { return 0.5 * (a + b); }
  cplx half() const { return 0.5 * (b - a); }

  cplx gamma(double s) const {
    switch (kind) {
    case PieceKind::segment: return a + (b - a) * s;
    case PieceKind::circle: return center + radius * std::exp(2.0 * pi * I * double(orientation) * s);
    case PieceKind::ellipse:
      return center + rx * std::cos(2 * pi * s) + I * double(orientation) * ry * std::sin(2 * pi * s);
    }
    return {};
  }

  cplx dgamma(double s) const {
    switch (kind) {
    case PieceKind::segment: return b - a;
    case PieceKind::circle:
      return 2.0 * pi * I * double(orientation) * radius * std::exp(2.0 * pi * I * double(orientation) * s);
    case PieceKind::ellipse:
      return 2 * pi * (-rx * std::sin(2 * pi * s) + I * double(orientation) * ry * std::cos(2 * pi * s));
    }
    return {};
  }

  // unit tangent at node j
  cplx tangent(int j) const {
    cplx d = kind == PieceKind::segment ? (b - a) : dgamma(ref[j]);
    return d / std::abs(d);
  }

  // characteristic length used to decide what "near" means
  double scale() const {
    switch (kind) {
    case PieceKind::segment: return std::abs(b - a);
    case PieceKind::circle: return radius;
    case PieceKind::ellipse: return std::min(rx, ry);
    }
    return 1.0;
  }

  // distance from z to the point set of the piece
  double distance(cplx z) const;
};

struct Contour {
  std::vector<ContourPiece> pieces;
  bool disjoint = true;
  std::size_t size() const { return pieces.size(); }
  bool empty() const { return pieces.empty(); }
};

namespace detail {

inline double first_kind(int j, int n) { return std::sin(pi * (2.0 * j + 1.0 - n) / (2.0 * n)); }
inline double second_kind(int j, int n) { return std::sin(pi * (2.0 * j - (n - 1)) / (2.0 * (n - 1))); }

inline double point_segment_distance(cplx z, cplx a, cplx b) {
  cplx d = b - a;
  double t = std::real((z - a) * std::conj(d)) / std::norm(d);
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(z - (a + t * d));
}

} // namespace detail

inline double ContourPiece::distance(cplx z) const {
  switch (kind) {
  case PieceKind::segment: return detail::point_segment_distance(z, a, b);
  case PieceKind::circle: return std::abs(std::abs(z - center) - radius);
  case PieceKind::ellipse: {
    // coarse scan followed by golden-section refinement on the parameter
    const int m = 256;
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
      double d = std::abs(gamma(double(j) / m) - z);
      if (d < bd) bd = d, best = j;
    }
    double lo = (best - 1.0) / m, hi = (best + 1.0) / m;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60; ++it) {
      double s1 = hi - g * (hi - lo), s2 = lo + g * (hi - lo);
      if (std::abs(gamma(s1) - z) < std::abs(gamma(s2) - z)) hi = s2;
      else lo = s1;
    }
    return std::min(bd, std::abs(gamma(0.5 * (lo + hi)) - z));
  }
  }
  return 0.0;
}

inline ContourPiece make_segment(cplx a, cplx b, int n, SegmentBasis basis = SegmentBasis::chebyshev) {
  if (a == b) fail(ErrorKind::invalid_argument, "make_segment: degenerate endpoints");
  if (n < 4) fail(ErrorKind::invalid_argument, "make_segment: n must be at least 4");
  ContourPiece p;
  p.kind = PieceKind::segment;
  p.basis = basis;
  p.a = a;
  p.b = b;
  p.n = n;
  p.ref.resize(n);
  p.nodes.resize(n);
  for (int j = 0; j < n; ++j) {
    double sig = basis == SegmentBasis::chebyshev ? detail::second_kind(j, n) : detail::first_kind(j, n);
    p.ref[j] = sig;
    p.nodes[j] = a + (b - a) * (0.5 * (1.0 + sig));
  }
  return p;
}

// reference nodes on [0,1] for the affine consistency property
inline std::vector<double> segment_reference_nodes(int n, SegmentBasis basis = SegmentBasis::chebyshev) {
  std::vector<double> r(n);
  for (int j = 0; j < n; ++j)
    r[j] = 0.5 * (1.0 + (basis == SegmentBasis::chebyshev ? detail::second_kind(j, n) : detail::first_kind(j, n)));
  return r;
}

inline void fill_closed_nodes(ContourPiece &p) {
  p.ref.resize(p.n);
  p.nodes.resize(p.n);
  for (int j = 0; j < p.n; ++j) {
    p.ref[j] = double(j) / p.n;
    p.nodes[j] = p.gamma(p.ref[j]);
  }
}

inline ContourPiece make_circle(cplx center, double radius, int orientation, int n) {
  if (!(radius > 0)) fail(ErrorKind::invalid_argument, "make_circle: radius must be positive");
  if (n < 4) fail(ErrorKind::invalid_argument, "make_circle: n must be at least 4");
  if (orientation != 1 && orientation != -1) fail(ErrorKind::invalid_argument, "make_circle: orientation is +1 or -1");
  ContourPiece p;
  p.kind = PieceKind::circle;
  p.center = center;
  p.radius = radius;
  p.orientation = orientation;
  p.n = n;
  fill_closed_nodes(p);
  return p;
}

inline ContourPiece make_ellipse(cplx center, double rx, double ry, int orientation, int n) {
  if (!(rx > 0) || !(ry > 0)) fail(ErrorKind::invalid_argument, "make_ellipse: semi-axes must be positive");
  if (n < 4) fail(ErrorKind::invalid_argument, "make_ellipse: n must be at least 4");
  if (orientation != 1 && orientation != -1) fail(ErrorKind::invalid_argument, "make_ellipse: orientation is +1 or -1");
  ContourPiece p;
  p.kind = PieceKind::ellipse;
  p.center = center;
  p.rx = rx;
  p.ry = ry;
  p.orientation = orientation;
  p.n = n;
  fill_closed_nodes(p);
  return p;
}

// Reference coordinate of a point z lying on the piece (segments: [-1,1]; closed: [0,1)).
inline double parameter_of(const ContourPiece &p, cplx z) {
  switch (p.kind) {
  case PieceKind::segment: return 2.0 * std::real((z - p.a) / (p.b - p.a)) - 1.0;
  case PieceKind::circle: {
    double s = std::arg((z - p.center) / p.radius) / (2 * pi) * p.orientation;
    return s - std::floor(s);
  }
  case PieceKind::ellipse: {
    cplx d = z - p.center;
    double s = std::atan2(p.orientation * d.imag() / p.ry, d.real() / p.rx) / (2 * pi);
    return s - std::floor(s);
  }
  }
  return 0.0;
}

inline double distance_to_contour(const Contour &c, cplx z) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto &p : c.pieces) d = std::min(d, p.distance(z));
  return d;
}

// True iff the conjugate of every node lies within tol of the point set of the contour.
inline bool check_schwarz_symmetry(const Contour &c, double tol) {
  for (const auto &p : c.pieces)
    for (cplx z : p.nodes)
      if (distance_to_contour(c, std::conj(z)) >= tol) return false;
  return true;
}

// Smallest distance between two distinct pieces, measured from the nodes of one piece to the
// other piece and refined along segments by sampling.
inline double piece_separation(const ContourPiece &p, const ContourPiece &q) {
  double d = std::numeric_limits<double>::infinity();
  auto sample = [](const ContourPiece &r, int m) {
    std::vector<cplx> pts;
    for (int j = 0; j <= m; ++j) pts.push_back(r.gamma(double(j) / m));
    return pts;
  };
  for (cplx z : sample(p, 400)) d = std::min(d, q.distance(z));
  for (cplx z : sample(q, 400)) d = std::min(d, p.distance(z));
  return d;
}

inline double min_separation(const Contour &c) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) d = std::min(d, piece_separation(c.pieces[i], c.pieces[j]));
  return d;
}

inline std::string describe(const ContourPiece &p) {
  std::ostringstream os;
  switch (p.kind) {
  case PieceKind::segment:
    os << (p.basis == SegmentBasis::band ? "band" : "segment") << "[" << p.a << " -> " << p.b << "]";
    break;
  case PieceKind::circle: os << "circle(" << p.center << ", r=" << p.radius << ", o=" << p.orientation << ")"; break;
  case PieceKind::ellipse:
    os << "ellipse(" << p.center << ", " << p.rx << "x" << p.ry << ", o=" << p.orientation << ")";
    break;
  }
  os << " n=" << p.n;
  return os.str();
}

} // namespace rhkdv
