#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rhkdv/dressing.hpp"

using namespace rhkdv;

namespace {

RHProblem constant_problem(Contour c, Mat2 G, Normalization norm = Normalization::vector) {
  RHProblem pb;
  pb.contour = std::move(c);
  for (std::size_t i = 0; i < pb.contour.size(); ++i) {
    pb.jump.push_back([G](cplx) { return G; });
    pb.jump_x.push_back([](cplx) { return Mat2::Zero().eval(); });
  }
  pb.normalization = norm;
  return pb;
}

cplx g_test(cplx k) { return std::exp(k) / (k - 3.0); }

RHProblem triangular_problem(Normalization norm) {
  RHProblem pb;
  pb.contour.pieces = {make_circle(cplx(0.2, 0.5), 0.3, 1, 32)};
  pb.jump.push_back([](cplx k) {
    Mat2 G = Mat2::Identity();
    G(1, 0) = g_test(k);
    return G;
  });
  pb.normalization = norm;
  return pb;
}

// (1/2 pi i) int_circle g(s)/(s - z) ds by adaptive quadrature
cplx brute_circle(const ContourPiece &p, const std::function<cplx(cplx)> &g, cplx z) {
  auto f = [&](double s) { return g(p.gamma(s)) * p.dgamma(s) / (p.gamma(s) - z) / (2.0 * oracle::pi * I); };
  return oracle::integrate(f, 0, 1, 1e-14);
}

Scenario one_soliton(int n = 32) {
  Scenario sc;
  sc.solitons.kappa = {1.0};
  sc.solitons.c = {1.0};
  sc.numerics.n = n;
  return sc;
}

} // namespace

TEST_CASE("identity jump gives the normalization everywhere", "[rh_solver]") {
  Contour c{{make_circle(I, 0.3, 1, 16), make_segment(-1.0, 1.0, 16), make_ellipse(cplx(0, -2), 0.6, 0.2, -1, 16)}};
  auto pb = constant_problem(c, Mat2::Identity());
  auto sol = solve(pb);
  for (const auto &blk : sol.density.coeffs) CHECK(blk.cwiseAbs().maxCoeff() < 1e-14);
  for (cplx k : {cplx(0.3, 0.2), cplx(5, -1), cplx(0, 3)}) {
    MatC phi = evaluate_phi(sol, pb, k);
    CHECK(std::abs(phi(0, 0) - 1.0) < 1e-14);
    CHECK(std::abs(phi(0, 1) - 1.0) < 1e-14);
  }
  CHECK(asymptotic_coefficient(sol, pb.contour).cwiseAbs().maxCoeff() < 1e-14);
  auto dx = solve_x_derivative(sol, pb);
  CHECK(evaluate_phi(dx, pb, cplx(0.3, 0.2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("empty contour is solved trivially", "[rh_solver]") {
  RHProblem pb;
  auto sol = solve(pb);
  CHECK(sol.converged);
  MatC phi = evaluate_phi(sol, pb, cplx(1, 1));
  CHECK(phi(0, 0) == cplx(1.0));
  CHECK(phi(0, 1) == cplx(1.0));
}

TEST_CASE("triangular jump: one Neumann step is exact", "[rh_solver]") {
  auto pb = triangular_problem(Normalization::matrix);
  auto sol = solve(pb);
  const auto &p = pb.contour.pieces[0];
  // Phi_21 = C[g]: compare with cauchy_eval of the interpolated g and with brute quadrature
  std::vector<MatC> vals{MatC(p.n, 1)};
  for (int l = 0; l < p.n; ++l) vals[0](l, 0) = g_test(p.nodes[l]);
  Density gd = density_from_values(pb.contour, vals);
  for (cplx k : {cplx(0.2, 0.5), cplx(0.25, 0.6), cplx(1.5, -0.5), cplx(-2, 3)}) {
    MatC phi = evaluate_phi(sol, pb, k);
    cplx expect = cauchy_eval(gd, pb.contour, k)[0];
    CHECK(std::abs(phi(1, 0) - expect) < 1e-10);
    CHECK(std::abs(phi(1, 0) - brute_circle(p, g_test, k)) < 1e-10);
    CHECK(std::abs(phi(1, 1) - 1.0) < 1e-12);
    CHECK(std::abs(phi(0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(phi(0, 1)) < 1e-12);
  }
  // -2 pi i s1_21 = int g dk
  MatC s1 = asymptotic_coefficient(sol, pb.contour);
  auto f = [&](double s) { return g_test(p.gamma(s)) * p.dgamma(s); };
  CHECK(std::abs(-2.0 * oracle::pi * I * s1(1, 0) - oracle::integrate(f, 0, 1, 1e-14)) < 1e-10);
}

TEST_CASE("vector solution is the row sum of the matrix solution", "[rh_solver]") {
  auto pm = triangular_problem(Normalization::matrix);
  auto pv = triangular_problem(Normalization::vector);
  auto sm = solve(pm), sv = solve(pv);
  for (cplx k : {cplx(0.2, 0.5), cplx(1.5, -0.5)}) {
    MatC m = evaluate_phi(sm, pm, k), v = evaluate_phi(sv, pv, k);
    CHECK(std::abs(m(0, 0) + m(1, 0) - v(0, 0)) < 1e-12);
    CHECK(std::abs(m(0, 1) + m(1, 1) - v(0, 1)) < 1e-12);
  }
}

TEST_CASE("normalization at infinity", "[rh_solver]") {
  auto pb = compose(one_soliton(), 0.4, 0.1);
  auto sol = solve(pb);
  MatC phi = evaluate_phi(sol, pb, cplx(1e6, 0));
  CHECK(std::abs(phi(0, 0) - 1.0) < 1e-5);
  CHECK(std::abs(phi(0, 1) - 1.0) < 1e-5);
}

TEST_CASE("jump relation holds between nodes", "[rh_solver][property]") {
  Scenario sc = one_soliton(48);
  auto g = oracle::rng(17);
  std::uniform_real_distribution<double> U(0, 1);
  for (double x : {-1.0, 0.5}) {
    auto pb = compose(sc, x, 0.2);
    auto sol = solve(pb);
    double worst = 0;
    for (std::size_t i = 0; i < pb.contour.size(); ++i)
      for (int r = 0; r < 16; ++r) {
        double s = U(g);
        MatC plus = boundary_phi(sol, pb, i, s, +1), minus = boundary_phi(sol, pb, i, s, -1);
        Mat2 G = pb.jump[i](point_at(pb.contour.pieces[i], s));
        worst = std::max(worst, (plus - minus * G).cwiseAbs().maxCoeff());
      }
    INFO("collocation residual " << sol.residual << ", off-node " << worst);
    CHECK(worst < 10 * std::max(sol.residual, 1e-15));
  }
}

TEST_CASE("second-kind bound for small perturbations of the identity", "[rh_solver][property]") {
  auto g = oracle::rng(3);
  std::normal_distribution<double> N(0, 1);
  Contour c{{make_circle(cplx(0, 0.8), 0.3, 1, 32), make_circle(cplx(0, -0.8), 0.3, -1, 32)}};
  for (double eps : {0.09, 0.01, 1e-4}) {
    Mat2 A, B;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) A(i, j) = cplx(N(g), N(g)), B(i, j) = cplx(N(g), N(g));
    RHProblem pb;
    pb.contour = c;
    // perturbation of unit size: E(k) = (A + B k) / |A + B k|_max on the contour
    double scale = 0;
    for (const auto &p : c.pieces)
      for (cplx k : p.nodes) scale = std::max(scale, max_abs(Mat2(A + B * k)));
    for (std::size_t i = 0; i < c.size(); ++i)
      pb.jump.push_back([=](cplx k) { return Mat2(Mat2::Identity() + eps * (A + B * k) / scale); });
    auto sol = solve(pb);
    double u = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
      u = std::max(u, (basis_matrix(c.pieces[i]) * sol.density.coeffs[i]).cwiseAbs().maxCoeff());
    INFO("eps " << eps << " max|u| " << u);
    CHECK(u <= 10 * eps);
  }
}

TEST_CASE("x-derivative agrees with central differences", "[rh_solver]") {
  Scenario sc = one_soliton();
  double x = 0.3, t = 0.1, h = 1e-4;
  Layout L = layout(sc, x, t);
  auto pb = compose(sc, x, t, L);
  auto sol = solve(pb);
  auto dx = solve_x_derivative(sol, pb);
  for (cplx k : {cplx(0.7, 0.3), cplx(2, 2), cplx(0, 2)}) {
    auto phi = [&](double xx) {
      auto p = compose(sc, xx, t, L);
      return evaluate_phi(solve(p), p, k);
    };
    MatC fd = (phi(x + h) - phi(x - h)) / (2 * h);
    CHECK((evaluate_phi(dx, pb, k) - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
  // the moment route: 2i d/dx (s1 sigma3)_1 by differences of s1
  auto s1 = [&](double xx) {
    auto p = compose(sc, xx, t, L);
    return asymptotic_coefficient(solve(p), p.contour);
  };
  cplx fdq = 2.0 * I * (s1(x + h)(0, 0) - s1(x - h)(0, 0)) / (2 * h);
  cplx q = 2.0 * I * asymptotic_coefficient(dx, pb.contour)(0, 0);
  CHECK(std::abs(fdq - q) < 1e-6);
}

TEST_CASE("x-independent jump has zero x-derivative", "[rh_solver]") {
  auto pb = triangular_problem(Normalization::vector);
  pb.jump_x = {[](cplx) { return Mat2::Zero().eval(); }};
  auto sol = solve(pb);
  auto dx = solve_x_derivative(sol, pb);
  CHECK(evaluate_phi(dx, pb, cplx(1, 1)).cwiseAbs().maxCoeff() < 1e-15);
  pb.jump_x.clear();
  CHECK_THROWS_AS(solve_x_derivative(sol, pb), Error);
}

TEST_CASE("one soliton at the origin: 2i d/dx (s1 sigma3)_1 = 2", "[rh_solver]") {
  auto pb = compose(one_soliton(), 0.0, 0.0);
  auto sol = solve(pb);
  auto dx = solve_x_derivative(sol, pb);
  MatC s1x = asymptotic_coefficient(dx, pb.contour);
  cplx v = 2.0 * I * s1x(0, 0);
  CHECK(std::abs(v - 2.0) < 1e-8);
}

TEST_CASE("solver failures are structured", "[rh_solver]") {
  auto pb = compose(one_soliton(), 0.0, 0.0);
  pb.max_condition = 1.0;
  try {
    solve(pb);
    FAIL("expected a solver failure");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::solver);
    CHECK(std::string(e.what()).find("(x,t)=(0,0)") != std::string::npos);
    CHECK(std::string(e.what()).find("piece sizes") != std::string::npos);
  }
  auto nan = triangular_problem(Normalization::vector);
  nan.jump[0] = [](cplx) {
    Mat2 G = Mat2::Identity();
    G(0, 1) = std::numeric_limits<double>::quiet_NaN();
    return G;
  };
  CHECK_THROWS_AS(solve(nan), Error);
}

TEST_CASE("symmetric reduction reproduces the general solve", "[rh_solver][property]") {
  Scenario sc = one_soliton();
  sc.solitons.kappa = {0.6, 1.1};
  sc.solitons.c = {2.0, 0.5};
  GenusData gd;
  gd.bands = {{1.5, 1.6}};
  gd.phases = {0.7};
  sc.genus = gd;
  ReflectionSpec R;
  R.amplitude = 0.2;
  R.width = 0.2;
  sc.reflection = R;
  for (double x : {-3.0, 1.0}) {
    auto sym = compose(sc, x, 0.3);
    auto gen = sym;
    gen.reduction.clear();
    auto a = solve(sym), b = solve(gen);
    for (cplx k : {cplx(0.3, 0.4), cplx(-2, 1)}) CHECK((evaluate_phi(a, sym, k) - evaluate_phi(b, gen, k)).cwiseAbs().maxCoeff() < 1e-11);
    auto ax = solve_x_derivative(a, sym), bx = solve_x_derivative(b, gen);
    CHECK(std::abs(asymptotic_coefficient(ax, sym.contour)(0, 0) - asymptotic_coefficient(bx, gen.contour)(0, 0)) < 1e-11);
  }
}

TEST_CASE("mirror maps reflect densities", "[rh_solver][property]") {
  auto g = oracle::rng(9);
  std::normal_distribution<double> N(0, 1);
  std::vector<std::pair<ContourPiece, ContourPiece>> pairs = {
      {make_segment(-2.0, 2.0, 12), make_segment(-2.0, 2.0, 12)},
      {make_segment(1.0, 1.5, 16, SegmentBasis::band), make_segment(-1.5, -1.0, 16, SegmentBasis::band)},
      {make_circle(I, 0.2, 1, 16), make_circle(-I, 0.2, -1, 16)},
      {make_ellipse(1.2, 0.3, 0.1, 1, 16), make_ellipse(-1.2, 0.3, 0.1, -1, 16)}};
  for (auto &[from, to] : pairs) {
    MatC R = mirror_map(from, to);
    VecC c(from.n);
    for (int j = 0; j < from.n; ++j) c[j] = cplx(N(g), N(g));
    VecC cm = R * c;
    for (double s : {0.31, -0.47, 0.77}) {
      if (to.closed() && s < 0) s += 1;
      cplx z = point_at(to, s);
      double sf = parameter_of(from, -z);
      double sign = std::real(direction_at(from, sf) * std::conj(direction_at(to, s))) < 0 ? 1.0 : -1.0;
      cplx v = (basis_row(to, s) * cm)(0), u = (basis_row(from, sf) * c)(0);
      CHECK(std::abs(v - sign * u) < 1e-11);
    }
  }
}

TEST_CASE("matrix normalization on a composed problem", "[rh_solver]") {
  Scenario sc = one_soliton();
  GenusData gd;
  gd.bands = {{1.5, 1.6}};
  gd.phases = {0.4};
  sc.genus = gd;
  auto pv = compose(sc, 0.7, 0.2);
  auto pm = pv;
  pm.normalization = Normalization::matrix;
  auto sv = solve(pv), sm = solve(pm);
  for (cplx k : {cplx(0.3, 0.4), cplx(-2, 1)}) {
    MatC m = evaluate_phi(sm, pm, k), v = evaluate_phi(sv, pv, k);
    CHECK(std::abs(m(0, 0) + m(1, 0) - v(0, 0)) < 1e-11);
    CHECK(std::abs(m(0, 1) + m(1, 1) - v(0, 1)) < 1e-11);
    // unimodular jumps: det Phi = 1
    CHECK(std::abs(m.determinant() - 1.0) < 1e-11);
  }
}
