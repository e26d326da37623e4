#include <catch_amalgamated.hpp>

#include <cstdlib>

#include "oracles.hpp"
#include "rhkdv/analysis.hpp"

using namespace rhkdv;

namespace {

Scenario solitons(std::vector<double> kappa) {
  Scenario sc;
  sc.solitons.kappa = kappa;
  sc.solitons.c.assign(kappa.size(), 1.0);
  return sc;
}

Scenario genus_one(double a = 1.0, double b = 1.05) {
  Scenario sc;
  GenusData G;
  G.bands = {{a, b}};
  G.phases = {0.3};
  sc.genus = G;
  return sc;
}

SampledField field_of(double a, double b, double h, double t, const std::function<double(double)> &q) {
  SampledField f;
  f.x0 = a;
  f.h = h;
  f.t = t;
  for (std::size_t i = 0; i < GridSpec{a, b, h}.count(); ++i) f.q.push_back(q(a + double(i) * h));
  return f;
}

double sech2(double z) { return 1.0 / (std::cosh(z) * std::cosh(z)); }

ErrorKind kind_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("expected an rhkdv::Error");
  return ErrorKind::solver;
}

} // namespace

TEST_CASE("scenario hash and thread count", "[analysis]") {
  auto a = solitons({1.0}), b = solitons({1.1});
  CHECK(scenario_hash(a) == scenario_hash(solitons({1.0})));
  CHECK(scenario_hash(a) != scenario_hash(b));
  CHECK(scenario_hash(a).size() == 16);

  ::setenv("RHKDV_THREADS", "3", 1);
  CHECK(thread_count() == 3);
  ::setenv("RHKDV_THREADS", "junk", 1);
  CHECK(thread_count() >= 1);
  ::unsetenv("RHKDV_THREADS");

  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::all_of(hit.begin(), hit.end(), [](int v) { return v == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("sample_grid", "[analysis]") {
  auto z = sample_grid(Scenario{}, {-3, 3, 0.5}, 1.0, 1);
  REQUIRE(z.size() == 13);
  CHECK(std::all_of(z.q.begin(), z.q.end(), [](double v) { return v == 0.0; }));
  CHECK(z.x_end() == Catch::Approx(3.0));

  auto f = sample_grid(solitons({1.0}), {-10, 10, 0.25}, 0.5, 1);
  double worst = 0;
  for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(f.q[i] - 2 * sech2(f.x(i) - 2.0)));
  CHECK(worst < 1e-6);
  CHECK(f.gaps.empty());
  CHECK(f.scenario_hash == scenario_hash(solitons({1.0})));

  CHECK(kind_of([] { sample_grid(Scenario{}, {0, 1, 0.0}, 0.0); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { sample_grid(Scenario{}, {1, 0, 0.1}, 0.0); }) == ErrorKind::invalid_argument);
}

TEST_CASE("sample_grid is independent of the thread count", "[analysis][property]") {
  auto sc = parse_scenario(R"({"solitons": {"kappa": [1.1]}, "genus": {"bands": [[0.8, 0.85]], "phases": [0.2]}})");
  auto a = sample_grid(sc, {-6, 6, 0.4}, 0.3, 1);
  auto b = sample_grid(sc, {-6, 6, 0.4}, 0.3, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.q[i] == b.q[i]);
}

TEST_CASE("gap filling interpolates linearly", "[analysis]") {
  SampledField f;
  f.q = {0, 99, 99, 3, 4, 99};
  f.gaps = {1, 2, 5};
  detail::fill_gaps(f);
  CHECK(f.q[1] == Catch::Approx(1.0));
  CHECK(f.q[2] == Catch::Approx(2.0));
  CHECK(f.q[5] == 4.0);
}

TEST_CASE("asymptotic regions follow the n+2 rule", "[analysis]") {
  CHECK(asymptotic_regions(genus_one(), 5, -40, 40).size() == 2);
  CHECK(asymptotic_regions(Scenario{}, 1, -10, 10).size() == 2);

  auto two = solitons({0.8, 1.4});
  two.genus = genus_one(2.0, 2.05).genus;
  auto w2 = asymptotic_regions(two, 5, -40, 60);
  CHECK(w2.size() == 4);

  auto four = solitons({0.8, 1.2, 1.6, 2.0});
  auto w4 = asymptotic_regions(four, 5, -30, 110);
  CHECK(w4.size() == 6);

  // the slowest of four solitons trails its free trajectory by the interaction shifts
  CHECK(soliton_centre(four, 0, 5) == Catch::Approx(12.8 - (std::log(5.0) + std::log(3.0) + std::log(2.8 / 1.2)) / 0.8));
  CHECK(soliton_centre(four, 3, 5) == Catch::Approx(80.0));

  // windows are ordered, disjoint and keep the margin from the origin and every soliton trajectory
  for (const auto *w : {&w2, &w4}) {
    const Scenario &sc = w == &w2 ? two : four;
    double m = 3 * background_wavelength(sc);
    for (std::size_t i = 0; i + 1 < w->size(); ++i) CHECK((*w)[i].x2 < (*w)[i + 1].x1);
    for (const auto &win : *w) {
      CHECK((0 <= win.x1 - m + 1e-12 || 0 >= win.x2 + m - 1e-12));
      for (std::size_t j = 0; j < sc.solitons.size(); ++j) {
        double c = soliton_centre(sc, j, 5);
        CHECK((c <= win.x1 - m + 1e-12 || c >= win.x2 + m - 1e-12));
      }
    }
  }

  CHECK(kind_of([&] { asymptotic_regions(two, 0.0, -40, 60); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([&] { asymptotic_regions(two, -1.0, -40, 60); }) == ErrorKind::invalid_argument);
}

TEST_CASE("background wavelength and dispersive tail", "[analysis]") {
  auto g = genus_one(1.0, 1.2);
  CHECK(background_wavelength(g) == Catch::Approx(oracle::pi / 1.1));
  CHECK(background_wavelength(solitons({0.5, 2.0})) == Catch::Approx(2.0));
  Scenario r;
  ReflectionSpec R;
  R.amplitude = 0.5;
  R.width = 0.2;
  r.reflection = R;
  double k = 0.2 * std::sqrt(std::log(500.0));
  CHECK(dispersive_tail_left(r, 2.0) == Catch::Approx(-24 * k * k));
  CHECK(std::abs(R.rho(k)) == Catch::Approx(1e-3));
}

TEST_CASE("spectrum of a cosine", "[analysis]") {
  double L = 2.5;
  auto f = field_of(0, 100, 0.1, 0, [&](double x) { return 0.3 * std::cos(2 * oracle::pi * x / L); });
  auto r = region_spectrum(f, {0, 100});
  REQUIRE(r.fundamentals.size() == 1);
  CHECK(std::abs(r.fundamentals[0].frequency - 1 / L) < r.bin_width);
  CHECK(r.fundamentals[0].amplitude == Catch::Approx(0.3).margin(0.02));
  CHECK(std::all_of(r.amplitude.begin(), r.amplitude.end(), [](double a) { return a >= 0; }));

  auto flat = field_of(0, 50, 0.1, 0, [](double) { return 0.7; });
  CHECK(region_spectrum(flat, {0, 50}).fundamentals.empty());

  CHECK(kind_of([&] { region_spectrum(f, {0, 5}); }) == ErrorKind::invalid_argument);
}

TEST_CASE("combination tones are not fundamentals", "[analysis][property]") {
  auto g = oracle::rng(4);
  std::uniform_real_distribution<double> U(0, 1);
  for (int trial = 0; trial < 5; ++trial) {
    double f1 = 0.3 + 0.1 * U(g), f2 = 0.55 + 0.1 * U(g);
    auto f = field_of(0, 120, 0.1, 0, [&](double x) {
      return 0.2 * std::cos(2 * oracle::pi * f1 * x) + 0.1 * std::cos(2 * oracle::pi * f2 * x + 1) +
             0.02 * std::cos(2 * oracle::pi * (f1 + f2) * x) + 0.01 * std::cos(2 * oracle::pi * (f2 - f1) * x) +
             0.005 * std::cos(2 * oracle::pi * 2 * f2 * x);
    });
    auto r = region_spectrum(f, {0, 120});
    REQUIRE(r.fundamentals.size() == 2);
    CHECK(std::abs(r.fundamentals[0].frequency - f1) < r.bin_width);
    CHECK(std::abs(r.fundamentals[1].frequency - f2) < r.bin_width);
    CHECK(r.peaks.size() >= 4);
  }
  CHECK(detail::is_combination(0.9, {0.5, 0.2}, 1e-9));
  CHECK(detail::is_combination(0.1, {0.5, 0.2}, 1e-9));
  CHECK_FALSE(detail::is_combination(0.5, {0.5}, 1e-9));
  CHECK_FALSE(detail::is_combination(0.33, {0.5, 0.2}, 1e-3));
}

TEST_CASE("nonlocality of a background against itself", "[analysis]") {
  auto bg = genus_one();
  auto r = nonlocality_diff(bg, bg, 0.5, {-10, 10, 0.25}, 1);
  CHECK(std::all_of(r.diff.begin(), r.diff.end(), [](double d) { return d == 0.0; }));
  CHECK(r.left_rms == 0.0);
  CHECK(r.right_rms == 0.0);
  CHECK(std::abs(r.shift) < 1e-3 * 0.25);
  CHECK(r.shift_relative() < 1e-10);
  CHECK(r.background_rms > 0);

  auto with_sol = bg;
  with_sol.solitons = solitons({1.0}).solitons;
  CHECK(kind_of([&] { nonlocality_diff(with_sol, with_sol, 0.5, {-10, 10, 0.25}, 1); }) == ErrorKind::incompatible);
  CHECK(kind_of([&] { nonlocality_diff(solitons({1.0}), Scenario{}, 0.5, {-10, 10, 0.25}, 1); }) ==
        ErrorKind::incompatible);
}

TEST_CASE("shift search recovers a translation", "[analysis]") {
  // the interpolation and golden-section search in isolation, on an analytic periodic field
  SampledField w = field_of(-20, 20, 0.1, 0, [](double x) { return std::cos(2.0 * x) + 0.3 * std::sin(4.0 * x); });
  double s0 = 0.137;
  auto mismatch = [&](double s) {
    double acc = 0;
    for (double x = -10; x <= 10; x += 0.1) {
      double d = std::cos(2.0 * (x + s0)) + 0.3 * std::sin(4.0 * (x + s0)) - detail::interpolate(w, x + s);
      acc += d * d;
    }
    return acc;
  };
  CHECK(std::abs(detail::golden_min(mismatch, 0.0, 0.3, 60) - s0) < 1e-4);
  CHECK(std::abs(detail::interpolate(w, 1.234) - (std::cos(2.468) + 0.3 * std::sin(4.936))) < 5e-4);
}

TEST_CASE("peak tracking requirements", "[analysis]") {
  auto none = solitons({1.0});
  CHECK(kind_of([&] { peak_track(none, {1.0}, 1); }) == ErrorKind::incompatible);
  CHECK(kind_of([&] { peak_track(genus_one(), {1.0}, 1); }) == ErrorKind::incompatible);
  auto disp = solitons({1.0});
  disp.genus = genus_one(2.0, 2.05).genus;
  ReflectionSpec R;
  R.amplitude = 0.2;
  R.width = 0.1;
  disp.reflection = R;
  CHECK(kind_of([&] { peak_track(disp, {1.0}, 1); }) == ErrorKind::incompatible);
}

TEST_CASE("peak tracking in the vanishing-background limit", "[analysis]") {
  auto sc = solitons({1.0});
  sc.genus = genus_one(3.0, 3.0 + 1e-9).genus;
  auto tr = peak_track(sc, {10.0}, 1);
  REQUIRE(tr.m.size() == 1);
  const auto &p = tr.m[0][0];
  CHECK(std::abs(p.max_full - 2.0) < 1e-4);
  CHECK(std::abs(tr.phi[0]) < 1e-6);
  CHECK(p.lower <= p.upper);
  CHECK(std::abs(p.upper - 2.0) < 1e-6);
  CHECK(std::abs(p.argmax - 40.0) < 1e-3);
  CHECK_FALSE(p.exited);
  CHECK(tr.exits() == 0);
}

TEST_CASE("measured soliton phases", "[analysis]") {
  auto sc = solitons({0.8, 1.3});
  sc.solitons.c = {2.0, 0.5};
  auto phi = measure_phases(sc);
  REQUIRE(phi.size() == 2);
  // oracle: locate the peaks of the determinant formula at the same late time
  double T = 0;
  {
    const auto &k = sc.solitons.kappa;
    T = std::max(10.0, 12.0 / (4 * (k[1] * k[1] - k[0] * k[0]) * k[0]));
  }
  std::vector<double> p0 = {sc.solitons.phi(0), sc.solitons.phi(1)};
  for (std::size_t j = 0; j < 2; ++j) {
    double k = sc.solitons.kappa[j];
    // the late-time peak sits at 4 k^2 T - phi_j; compare against a fine scan of the oracle
    double guess = 4 * k * k * T - phi[j], best = -1, bx = 0;
    for (double x = guess - 0.5; x <= guess + 0.5; x += 1e-4) {
      double v = oracle::nsoliton_fd(sc.solitons.kappa, p0, x, T);
      if (v > best) best = v, bx = x;
    }
    CHECK(std::abs(bx - guess) < 2e-3);
    CHECK(best == Catch::Approx(2 * k * k).margin(1e-3));
    CHECK(std::abs(phi[j] - asymptotic_phase(sc.solitons, j)) < 1e-3);
  }
  CHECK(asymptotic_phase(sc.solitons, 1) == sc.solitons.phi(1));
}

TEST_CASE("KdV residual of exact samples", "[analysis]") {
  double t = 0.3;
  auto level = [&](double h, double tt) {
    return field_of(-4, 6, h, tt, [&](double x) { return 2 * sech2(x - 4 * tt); });
  };
  auto residuals = [&](double h, double dt) {
    std::vector<SampledField> L;
    for (int j = -2; j <= 2; ++j) L.push_back(level(h, t + j * dt));
    return std::pair{kdv_residual(L[1], L[2], L[3]), kdv_residual({&L[0], &L[1], &L[2], &L[3], &L[4]})};
  };
  auto [r3, r5] = residuals(0.02, 1e-3);

  // For a wave of speed 4, q_ttt = -64 q_xxx, so the centred t difference leaves 64 dt^2/6 max|q_xxx|;
  // what remains is the x truncation, which the five-level residual isolates.
  double qxxx = 0;
  for (double x = -4; x <= 6; x += 1e-3) {
    double s = 1e-3, z = x - 4 * t;
    double v = (2 * sech2(z + 2 * s) - 4 * sech2(z + s) + 4 * sech2(z - s) - 2 * sech2(z - 2 * s)) / (2 * s * s * s);
    qxxx = std::max(qxxx, std::abs(v));
  }
  double predicted = 64 * 1e-6 / 6 * qxxx;
  CHECK(predicted > 8e-5);
  CHECK(std::abs(r3 - predicted) <= 1.05 * r5);
  CHECK(r3 < 1e-4);
  CHECK(r5 < 2e-5);

  // both truncations shrink at their formal orders
  auto [r3h, r5h] = residuals(0.01, 5e-4);
  CHECK(r3h < r3 / 3.5);
  CHECK(r5h < r5 / 12);
  CHECK(r5h < 1e-5);

  auto zero = field_of(0, 1, 0.02, 0, [](double) { return 0.0; });
  auto z0 = zero, z2 = zero;
  z0.t = -1e-3;
  z2.t = 1e-3;
  CHECK(kdv_residual(z0, zero, z2) == 0.0);
}

TEST_CASE("KdV residual of cnoidal samples", "[analysis]") {
  CnoidalParams p;
  p.m = 0.6;
  p.k = 0.9;
  p.a = 0.1;
  double h = 0.02, dt = 1e-3;
  auto level = [&](double t) { return field_of(-5, 5, h, t, [&](double x) { return cnoidal_exact(p, x, t); }); };
  auto a = level(0.5 - dt), b = level(0.5), c = level(0.5 + dt);
  CHECK(kdv_residual(a, b, c) < 1e-5);
}

TEST_CASE("KdV residual input checks", "[analysis]") {
  auto f = field_of(0, 1, 0.05, 0, [](double x) { return x; });
  auto g = f, k = f;
  g.t = 0.1;
  k.t = 0.2;
  auto shifted = k;
  shifted.x0 = 0.01;
  CHECK(kind_of([&] { kdv_residual(f, g, shifted); }) == ErrorKind::invalid_argument);
  auto uneven = k;
  uneven.t = 0.3;
  CHECK(kind_of([&] { kdv_residual(f, g, uneven); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([&] { kdv_residual({&f, &g}); }) == ErrorKind::invalid_argument);
  CHECK_NOTHROW(kdv_residual(f, g, k));
}

TEST_CASE("computed soliton fields satisfy KdV as well as the oracle", "[analysis][property]") {
  auto sc = solitons({0.7, 1.2});
  double h = 0.02, dt = 1e-3, t = 0.4;
  GridSpec g{-2, 2, h};
  auto a = sample_grid(sc, g, t - dt, 1), b = sample_grid(sc, g, t, 1), c = sample_grid(sc, g, t + dt, 1);
  std::vector<double> k = {0.7, 1.2}, phi = {0.0, 0.0};
  auto exact = [&](double tt) { return field_of(-2, 2, h, tt, [&](double x) { return nsoliton_exact(k, phi, x, tt); }); };
  auto ea = exact(t - dt), eb = exact(t), ec = exact(t + dt);
  double computed = kdv_residual(a, b, c), reference = kdv_residual(ea, eb, ec);
  CHECK(computed <= 10 * reference);
  CHECK(computed < 1e-3);
}

TEST_CASE("conserved mass", "[analysis]") {
  auto one = sample_grid(solitons({1.0}), {-20, 20, 0.1}, 0.0, 1);
  CHECK(std::abs(conserved_mass(one) - 4.0) < 1e-6);

  auto two = solitons({0.7, 1.2});
  auto m0 = conserved_mass(sample_grid(two, {-30, 30, 0.1}, 0.0, 1));
  auto m3 = conserved_mass(sample_grid(two, {-25, 45, 0.1}, 3.0, 1));
  CHECK(std::abs(m0 - 7.6) < 1e-5);
  CHECK(std::abs(m3 - m0) < 1e-5);

  CHECK(kind_of([] { conserved_mass(sample_grid(solitons({1.0}), {-1, 1, 0.1}, 0.0, 1)); }) == ErrorKind::invalid_argument);
}
