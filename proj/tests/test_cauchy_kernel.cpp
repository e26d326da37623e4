#include <catch_amalgamated.hpp>

#include "cauchy_oracles.hpp"

using namespace rhkdv;
using Catch::Matchers::WithinAbs;

using namespace kernel_oracle;

TEST_CASE("constant density on the unit circle", "[cauchy]") {
  auto p = make_circle(0.0, 1.0, 1, 8);
  VecC c = VecC::Zero(8);
  c[0] = 1.0;
  Contour C = one(p);
  Density u = single(p, c);
  CHECK(std::abs(cauchy_eval(u, C, 0.0)[0] - 1.0) < 1e-14);
  CHECK(std::abs(cauchy_eval(u, C, 2.0)[0]) < 1e-14);
  VecC plus = cauchy_boundary(u, C, +1)[0];
  VecC minus = cauchy_boundary(u, C, -1)[0];
  CHECK((plus.array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK(minus.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(std::abs(first_moment(u, C)[0]) < 1e-14);
}

TEST_CASE("zero density gives zero transform", "[cauchy]") {
  for (const auto &p : all_kinds()) {
    Contour C = one(p);
    Density u = Density::zeros(C, 2);
    CHECK(cauchy_eval(u, C, cplx(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("off-contour transforms match brute-force quadrature", "[cauchy]") {
  unsigned seed = 11;
  for (const auto &p : all_kinds()) {
    VecC c = smooth_random(p.n, seed++, p.closed());
    Contour C = one(p);
    Density u = single(p, c);
    for (cplx z : {cplx(3, 3), cplx(0.2, 0.7), cplx(-2, -0.4), cplx(1.2, 0.45)}) {
      if (p.distance(z) < 0.05) continue;
      cplx got = cauchy_eval(u, C, z)[0];
      cplx want = brute_cauchy(p, c, z);
      INFO(describe(p) << " z=" << z);
      CHECK(std::abs(got - want) < 1e-10);
    }
  }
}

TEST_CASE("near-contour evaluation stays accurate", "[cauchy]") {
  unsigned seed = 40;
  for (const auto &p : all_kinds()) {
    VecC c = smooth_random(p.n, seed++, p.closed());
    Contour C = one(p);
    Density u = single(p, c);
    // points at distance ~1e-2 off an interior node, both sides
    int j = p.n / 3;
    cplx t = p.tangent(j), nrm = I * t;
    for (double d : {1e-2, -1e-2, 3e-3}) {
      cplx z = p.nodes[j] + d * nrm;
      cplx got = cauchy_eval(u, C, z)[0];
      cplx want = brute_cauchy(p, c, z);
      INFO(describe(p) << " d=" << d);
      CHECK(std::abs(got - want) < 1e-9);
    }
  }
}

TEST_CASE("Plemelj identity for random densities on every piece kind", "[cauchy][property]") {
  auto pieces = all_kinds();
  Contour C{pieces};
  std::vector<MatC> vals;
  for (std::size_t i = 0; i < pieces.size(); ++i) vals.push_back(MatC::Random(pieces[i].n, 2));
  Density u = density_from_values(C, vals);
  auto plus = cauchy_boundary(u, C, +1), minus = cauchy_boundary(u, C, -1);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    INFO(describe(pieces[i]));
    CHECK((plus[i] - minus[i] - vals[i]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("boundary values are limits of the off-contour transform", "[cauchy]") {
  unsigned seed = 70;
  for (const auto &p : all_kinds()) {
    VecC c = smooth_random(p.n, seed++, p.closed());
    Contour C = one(p);
    Density u = single(p, c);
    VecC plus = cauchy_boundary(u, C, +1)[0];
    VecC minus = cauchy_boundary(u, C, -1)[0];
    int j = p.n / 2 - 1;
    cplx nrm = I * p.tangent(j);
    // polynomial extrapolation to the curve from brute-force values on each side
    for (int side : {1, -1}) {
      auto at = [&](int m) { return brute_cauchy(p, c, p.nodes[j] + double(side * m) * 2e-4 * nrm); };
      cplx lim = 4.0 * at(1) - 6.0 * at(2) + 4.0 * at(3) - at(4);
      cplx got = side > 0 ? plus[j] : minus[j];
      INFO(describe(p) << " side " << side);
      CHECK(std::abs(got - lim) < 1e-6);
    }
  }
}

TEST_CASE("principal value of T2 on [-1,1]", "[cauchy]") {
  auto p = make_segment(-1.0, 1.0, 9);
  VecC c = VecC::Zero(9);
  c[2] = 1.0;
  Contour C = one(p);
  Density u = single(p, c);
  VecC plus = cauchy_boundary(u, C, +1)[0], minus = cauchy_boundary(u, C, -1)[0];
  for (int j = 1; j + 1 < p.n; ++j) {
    double s0 = p.ref[j];
    auto T2 = [](double s) { return 2 * s * s - 1; };
    // PV int T2(s)/(s-s0) ds = int (T2(s)-T2(s0))/(s-s0) ds + T2(s0) log((1-s0)/(1+s0))
    cplx reg = oracle::integrate([&](double s) { return s == s0 ? cplx(4 * s0) : cplx((T2(s) - T2(s0)) / (s - s0)); }, -1, 1);
    cplx pv = reg + T2(s0) * std::log((1 - s0) / (1 + s0));
    CHECK(std::abs(plus[j] + minus[j] - pv / (oracle::pi * I)) < 1e-8);
  }
}

TEST_CASE("first moment closed forms", "[cauchy]") {
  auto seg = make_segment(-1.0, 1.0, 6);
  VecC c = VecC::Zero(6);
  c[0] = 1.0;
  CHECK(std::abs(first_moment(single(seg, c), one(seg))[0] - I / oracle::pi) < 1e-14);
}

TEST_CASE("first moment matches quadrature for oscillatory densities", "[cauchy]") {
  // density e^{iks + i k^3 t} f(k) sampled on [-2,2] and interpolated
  auto p = make_segment(-2.0, 2.0, 64);
  double x = 0.7, t = 0.1;
  auto f = [&](double k) { return std::exp(I * (k * x + k * k * k * t)) * std::exp(-k * k); };
  Contour C = one(p);
  MatC vals(p.n, 1);
  for (int j = 0; j < p.n; ++j) vals(j, 0) = f(p.nodes[j].real());
  Density u = density_from_values(C, {vals});
  cplx want = -oracle::integrate([&](double k) { return f(k); }, -2, 2) / (2.0 * oracle::pi * I);
  CHECK(std::abs(first_moment(u, C)[0] - want) < 1e-10);
}

TEST_CASE("decay and moment consistency at large |k|", "[cauchy][property]") {
  // small pieces about the origin: the O(1/k) correction to k C[u](k) scales with the piece size
  unsigned seed = 100;
  std::vector<ContourPiece> centred = {make_segment(-0.01, 0.01, 12), make_segment(-0.01, 0.01, 12, SegmentBasis::band),
                                       make_circle(0.0, 0.01, 1, 16), make_circle(0.0, 0.01, -1, 16),
                                       make_ellipse(0.0, 0.01, 0.005, 1, 32)};
  for (const auto &p : centred) {
    VecC c = smooth_random(p.n, seed++, p.closed());
    Contour C = one(p);
    Density u = single(p, c);
    cplx m = first_moment(u, C)[0];
    if (std::abs(m) < 1e-8) continue;
    for (auto [R, tol] : {std::pair{1e3, 1e-4}, std::pair{1e6, 1e-7}}) {
      cplx k = R * std::exp(I * 0.7);
      cplx kc = k * cauchy_eval(u, C, k)[0];
      INFO(describe(p) << " R=" << R);
      CHECK(std::abs(kc - m) / std::abs(m) < tol);
    }
  }
}

TEST_CASE("Cauchy-Riemann residual off the contour", "[cauchy][property]") {
  unsigned seed = 130;
  for (const auto &p : all_kinds()) {
    VecC c = smooth_random(p.n, seed++, p.closed());
    Contour C = one(p);
    Density u = single(p, c);
    for (cplx z : {cplx(2.5, 1.5), cplx(-0.5, 0.3), cplx(0.9, -1.3)}) {
      if (p.distance(z) < 0.1) continue;
      double h = 1e-4;
      cplx dx = (cauchy_eval(u, C, z + h)[0] - cauchy_eval(u, C, z - h)[0]) / (2 * h);
      cplx dy = (cauchy_eval(u, C, z + I * h)[0] - cauchy_eval(u, C, z - I * h)[0]) / (2 * h);
      CHECK(std::abs(dx + I * dy) < 1e-6);
    }
  }
}

TEST_CASE("linearity of the transform", "[cauchy][property]") {
  auto pieces = all_kinds();
  Contour C{pieces};
  Density u, v, w;
  u.width = v.width = w.width = 1;
  cplx al(0.3, -1.2), be(2.0, 0.5);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    u.coeffs.push_back(smooth_random(pieces[i].n, 200 + unsigned(i), pieces[i].closed()));
    v.coeffs.push_back(smooth_random(pieces[i].n, 300 + unsigned(i), pieces[i].closed()));
    w.coeffs.push_back(al * u.coeffs.back() + be * v.coeffs.back());
  }
  cplx z(0.4, 2.7);
  cplx lhs = cauchy_eval(w, C, z)[0];
  cplx rhs = al * cauchy_eval(u, C, z)[0] + be * cauchy_eval(v, C, z)[0];
  CHECK(std::abs(lhs - rhs) < 1e-13 * (1 + std::abs(lhs)));
}

TEST_CASE("points on the contour are rejected", "[cauchy]") {
  auto p = make_circle(0.0, 1.0, 1, 8);
  Contour C = one(p);
  Density u = Density::zeros(C, 1);
  CHECK_THROWS_AS(cauchy_eval(u, C, 1.0), Error);
}
