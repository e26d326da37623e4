#pragma once

#include <array>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phase.hpp"
#include "rh_solver.hpp"

namespace rhkdv {

struct SolitonData {
  std::vector<double> kappa;
  std::vector<double> c;          // norming constants, c > 0; phi = log(c) / (2 kappa)
  std::optional<double> radius;   // largest circle radius; default 0.25 * min gap
  std::vector<int> omit_lower;    // fault injection: solitons whose k = -i kappa circle is left out

  std::size_t size() const { return kappa.size(); }
  double phi(std::size_t j) const { return std::log(c[j]) / (2.0 * kappa[j]); }
  double max_radius() const {
    if (radius) return *radius;
    double g = kappa.empty() ? 1.0 : kappa[0];
    for (std::size_t j = 1; j < kappa.size(); ++j) g = std::min(g, kappa[j] - kappa[j - 1]);
    return 0.25 * g;
  }
};

enum class ReflectionType { gaussian, rational };

struct ReflectionSpec {
  ReflectionType type = ReflectionType::gaussian;
  double amplitude = 0.0;
  double width = 1.0;
  bool deform = false; // accepted and echoed; the contour stays on the real axis

  // analytic continuation of rho off the real line
  cplx rho(cplx k) const {
    cplx g = amplitude * std::exp(-(k / width) * (k / width));
    if (type == ReflectionType::rational) g *= width / (width - I * k);
    return g;
  }
  // conj(rho(conj k)), equal to conj(rho(k)) on the real line
  cplx rho_star(cplx k) const { return std::conj(rho(std::conj(k))); }
  // |rho(k)| < 1e-14 for |k| > truncation()
  double truncation() const {
    double a = std::abs(amplitude);
    if (a < 1e-14) return 0.0;
    return width * std::sqrt(std::log(a / 1e-14));
  }
};

enum class BandMode { segment, ellipse };

struct GenusData {
  std::vector<std::array<double, 2>> bands;
  std::vector<double> phases;
  BandMode mode = BandMode::segment;
  std::size_t size() const { return bands.size(); }
};

struct Numerics {
  int n = 32;
  double tol = 1e-8;
  double ell = 0.5;
  double gap = 0.05;
};

struct Scenario {
  SolitonData solitons;
  std::optional<ReflectionSpec> reflection;
  std::optional<GenusData> genus;
  Numerics numerics;

  bool has_solitons() const { return !solitons.kappa.empty(); }
  bool has_reflection() const { return reflection && std::abs(reflection->amplitude) > 0; }
  bool has_genus() const { return genus && !genus->bands.empty(); }
  bool empty() const { return !has_solitons() && !has_reflection() && !has_genus(); }

  Scenario without_reflection() const {
    Scenario s = *this;
    s.reflection.reset();
    return s;
  }
  Scenario without_solitons() const {
    Scenario s = *this;
    s.solitons = SolitonData{};
    return s;
  }
  Scenario without_genus() const {
    Scenario s = *this;
    s.genus.reset();
    return s;
  }
};

// ---------------------------------------------------------------------------------------------
// Validation and parsing

inline void validate(const Scenario &sc) {
  auto bad = [](const std::string &m) { fail(ErrorKind::parse, m); };
  const auto &S = sc.solitons;
  if (S.c.size() != S.kappa.size()) bad("solitons: kappa and c differ in length");
  for (std::size_t j = 0; j < S.size(); ++j) {
    if (!(S.kappa[j] > 0)) bad("solitons: kappa must be positive");
    if (j > 0 && !(S.kappa[j] > S.kappa[j - 1])) bad("kappa not increasing");
    if (!(S.c[j] > 0)) bad("solitons: norming constant c must be positive");
  }
  if (S.radius && !(*S.radius > 0)) bad("solitons: radius must be positive");
  for (int j : S.omit_lower)
    if (j < 0 || std::size_t(j) >= S.size()) bad("solitons.omit_lower: index out of range");
  if (S.size() > 0 && S.max_radius() * 2 >= S.kappa[0]) bad("solitons: radius too large, circles would reach the real axis");
  if (S.radius && S.size() > 1) {
    for (std::size_t j = 1; j < S.size(); ++j)
      if (2 * *S.radius >= S.kappa[j] - S.kappa[j - 1]) bad("solitons: circles overlap");
  }
  const auto &N = sc.numerics;
  if (N.n < 8 || N.n % 2) bad("numerics: n must be an even integer >= 8");
  if (!(N.tol > 0)) bad("numerics: tol must be positive");
  if (!(N.ell > 0)) bad("numerics: ell must be positive");
  if (!(N.gap > 0)) bad("numerics: gap must be positive");
  if (sc.reflection) {
    const auto &R = *sc.reflection;
    if (!(std::abs(R.amplitude) < 1.0 - 1e-6)) bad("reflection magnitude ≥ 1");
    if (!(R.width > 0)) bad("reflection: width must be positive");
  }
  if (sc.genus) {
    const auto &G = *sc.genus;
    if (G.phases.size() != G.bands.size()) bad("genus: one phase per band required");
    for (std::size_t j = 0; j < G.size(); ++j) {
      double a = G.bands[j][0], b = G.bands[j][1];
      if (!(a > 0)) bad("genus: bands must lie in k > 0 (mirror bands are implied) and not touch 0");
      if (!(b > a)) bad("genus: band endpoints must satisfy a < b");
      if (j > 0 && !(a > G.bands[j - 1][1] + 2 * N.gap)) bad("genus: bands overlap or are closer than 2*gap");
      if (!std::isfinite(G.phases[j])) bad("genus: phases must be finite");
    }
    if (!G.bands.empty() && sc.has_reflection() &&
        !(sc.reflection->truncation() + N.gap < G.bands[0][0] - (G.mode == BandMode::ellipse ? N.gap : 0.0)))
      bad("reflection support overlaps bands: truncation radius + gap must stay below the first band");
  }
}

namespace detail {

inline std::size_t line_of(const std::string &text, std::size_t byte, std::size_t *col) {
  std::size_t line = 1, c = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') ++line, c = 1;
    else ++c;
  }
  *col = c;
  return line;
}

inline void only_keys(const nlohmann::json &j, const std::string &where, std::initializer_list<const char *> keys) {
  if (!j.is_object()) fail(ErrorKind::parse, where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char *k : keys) ok = ok || it.key() == k;
    if (!ok) fail(ErrorKind::parse, where + ": unknown key \"" + it.key() + "\"");
  }
}

inline double number(const nlohmann::json &j, const std::string &field) {
  if (!j.is_number()) fail(ErrorKind::parse, field + ": expected a number");
  return j.get<double>();
}

inline std::vector<double> numbers(const nlohmann::json &j, const std::string &field) {
  if (!j.is_array()) fail(ErrorKind::parse, field + ": expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
  return v;
}

} // namespace detail

inline Scenario parse_scenario(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    std::size_t col;
    std::size_t line = detail::line_of(text, e.byte == 0 ? 0 : e.byte - 1, &col);
    fail(ErrorKind::parse, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  Scenario sc;
  detail::only_keys(j, "scenario", {"solitons", "reflection", "genus", "numerics"});
  if (j.contains("solitons")) {
    const auto &s = j["solitons"];
    detail::only_keys(s, "solitons", {"kappa", "c", "radius", "omit_lower"});
    if (!s.contains("kappa")) fail(ErrorKind::parse, "solitons.kappa: missing");
    sc.solitons.kappa = detail::numbers(s["kappa"], "solitons.kappa");
    sc.solitons.c = s.contains("c") ? detail::numbers(s["c"], "solitons.c")
                                    : std::vector<double>(sc.solitons.kappa.size(), 1.0);
    if (s.contains("radius")) sc.solitons.radius = detail::number(s["radius"], "solitons.radius");
    if (s.contains("omit_lower")) {
      if (!s["omit_lower"].is_array()) fail(ErrorKind::parse, "solitons.omit_lower: expected an array of indices");
      for (const auto &v : s["omit_lower"]) {
        if (!v.is_number_integer()) fail(ErrorKind::parse, "solitons.omit_lower: expected integer indices");
        sc.solitons.omit_lower.push_back(v.get<int>());
      }
    }
  }
  if (j.contains("reflection")) {
    const auto &r = j["reflection"];
    detail::only_keys(r, "reflection", {"type", "amplitude", "width", "deform"});
    ReflectionSpec R;
    if (r.contains("type")) {
      if (!r["type"].is_string()) fail(ErrorKind::parse, "reflection.type: expected a string");
      std::string t = r["type"];
      if (t == "gaussian") R.type = ReflectionType::gaussian;
      else if (t == "rational") R.type = ReflectionType::rational;
      else fail(ErrorKind::parse, "reflection.type: expected \"gaussian\" or \"rational\"");
    }
    if (!r.contains("amplitude")) fail(ErrorKind::parse, "reflection.amplitude: missing");
    R.amplitude = detail::number(r["amplitude"], "reflection.amplitude");
    if (r.contains("width")) R.width = detail::number(r["width"], "reflection.width");
    if (r.contains("deform")) {
      if (!r["deform"].is_boolean()) fail(ErrorKind::parse, "reflection.deform: expected true or false");
      R.deform = r["deform"];
    }
    sc.reflection = R;
  }
  if (j.contains("genus")) {
    const auto &g = j["genus"];
    detail::only_keys(g, "genus", {"bands", "phases", "mode"});
    GenusData G;
    if (!g.contains("bands") || !g["bands"].is_array()) fail(ErrorKind::parse, "genus.bands: expected an array of [a,b]");
    for (std::size_t i = 0; i < g["bands"].size(); ++i) {
      auto v = detail::numbers(g["bands"][i], "genus.bands[" + std::to_string(i) + "]");
      if (v.size() != 2) fail(ErrorKind::parse, "genus.bands[" + std::to_string(i) + "]: expected [a,b]");
      G.bands.push_back({v[0], v[1]});
    }
    G.phases = g.contains("phases") ? detail::numbers(g["phases"], "genus.phases") : std::vector<double>(G.bands.size(), 0.0);
    if (g.contains("mode")) {
      if (!g["mode"].is_string()) fail(ErrorKind::parse, "genus.mode: expected a string");
      std::string m = g["mode"];
      if (m == "segment") G.mode = BandMode::segment;
      else if (m == "ellipse") G.mode = BandMode::ellipse;
      else fail(ErrorKind::parse, "genus.mode: expected \"segment\" or \"ellipse\"");
    }
    sc.genus = G;
  }
  if (j.contains("numerics")) {
    const auto &n = j["numerics"];
    detail::only_keys(n, "numerics", {"n", "tol", "ell", "gap"});
    if (n.contains("n")) {
      if (!n["n"].is_number_integer()) fail(ErrorKind::parse, "numerics.n: expected an integer");
      sc.numerics.n = n["n"];
    }
    if (n.contains("tol")) sc.numerics.tol = detail::number(n["tol"], "numerics.tol");
    if (n.contains("ell")) sc.numerics.ell = detail::number(n["ell"], "numerics.ell");
    if (n.contains("gap")) sc.numerics.gap = detail::number(n["gap"], "numerics.gap");
  }
  validate(sc);
  return sc;
}

inline Scenario load_scenario(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::parse, "cannot open scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

inline nlohmann::json to_json(const Scenario &sc) {
  nlohmann::json j = nlohmann::json::object();
  if (sc.has_solitons()) {
    j["solitons"] = {{"kappa", sc.solitons.kappa}, {"c", sc.solitons.c}};
    if (sc.solitons.radius) j["solitons"]["radius"] = *sc.solitons.radius;
    if (!sc.solitons.omit_lower.empty()) j["solitons"]["omit_lower"] = sc.solitons.omit_lower;
  }
  if (sc.reflection) {
    const auto &R = *sc.reflection;
    j["reflection"] = {{"type", R.type == ReflectionType::gaussian ? "gaussian" : "rational"},
                       {"amplitude", R.amplitude},
                       {"width", R.width},
                       {"deform", R.deform}};
  }
  if (sc.genus) {
    nlohmann::json bands = nlohmann::json::array();
    for (auto &b : sc.genus->bands) bands.push_back({b[0], b[1]});
    j["genus"] = {{"bands", bands}, {"phases", sc.genus->phases}, {"mode", sc.genus->mode == BandMode::segment ? "segment" : "ellipse"}};
  }
  j["numerics"] = {{"n", sc.numerics.n}, {"tol", sc.numerics.tol}, {"ell", sc.numerics.ell}, {"gap", sc.numerics.gap}};
  return j;
}

// ---------------------------------------------------------------------------------------------
// Geometry and discretization choices at one (x,t)

struct Layout {
  std::vector<double> radius;   // per soliton
  std::vector<bool> flipped;    // per soliton: residue moved to the other triangular factor
  std::vector<int> band_n;      // per band: unknowns per family
  std::vector<double> ellipse_ry;
  double K = 0.0;               // dispersive segment [-K, K]
  int disp_n = 0;
};

namespace detail {

inline int even(int n) { return n + (n % 2); }

// total phase change of e^{2 theta} along [lo,hi] measured in units of 2 pi
inline double oscillations(double lo, double hi, double x, double t) {
  auto w = [&](double k) { return 2 * x * k + 8 * t * k * k * k; };
  double v = std::abs(w(hi) - w(lo));
  // account for a turning point inside the interval
  double r = -x / (12 * t == 0 ? 1e300 : 12 * t);
  if (t != 0 && r > 0) {
    double k0 = std::sqrt(r);
    for (double s : {k0, -k0})
      if (s > lo && s < hi) v = std::abs(w(s) - w(lo)) + std::abs(w(hi) - w(s));
  }
  return v / (2 * pi);
}

} // namespace detail

namespace detail {

// A soliton residue is moved to the other triangular factor when its effective weight
// |C e^{2 theta(i kappa)} tau(i kappa)| exceeds 2 kappa, C = 2 i kappa / c. The tau factor depends on
// which other solitons are flipped, so the flip set is chosen to minimise the largest log-excess
// of any circle jump; exhaustive for up to 12 solitons, by fixed-point iteration beyond.
inline std::vector<bool> choose_flips(const SolitonData &S, double x, double t) {
  std::size_t n = S.size();
  std::vector<double> m(n);
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    double k = S.kappa[j];
    m[j] = -2 * k * (x - 4 * k * k * t) - std::log(S.c[j]);
    for (std::size_t l = 0; l < n; ++l)
      if (l != j) w[j][l] = 2 * std::log(std::abs((k - S.kappa[l]) / (k + S.kappa[l])));
  }
  auto excess = [&](const std::vector<bool> &f, std::size_t j) {
    double e = m[j];
    for (std::size_t l = 0; l < n; ++l)
      if (f[l] && l != j) e += w[j][l];
    return f[j] ? -e : e;
  };
  auto cost = [&](const std::vector<bool> &f) {
    double c = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) c = std::max(c, excess(f, j));
    return c;
  };
  std::vector<bool> best(n);
  for (std::size_t j = 0; j < n; ++j) best[j] = m[j] > 0;
  if (n == 0) return best;
  if (n <= 12) {
    double bc = cost(best);
    std::vector<bool> f(n);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      for (std::size_t j = 0; j < n; ++j) f[j] = (mask >> j) & 1u;
      double c = cost(f);
      if (c < bc - 1e-12) bc = c, best = f;
    }
    return best;
  }
  for (std::size_t it = 0; it < 2 * n; ++it) {
    bool changed = false;
    for (std::size_t j = 0; j < n; ++j)
      if (excess(best, j) > 0) best[j] = !best[j], changed = true;
    if (!changed) break;
  }
  return best;
}

} // namespace detail

inline Layout layout(const Scenario &sc, double x, double t) {
  Layout L;
  const auto &S = sc.solitons;
  int n = sc.numerics.n;
  double rmax = S.max_radius();
  for (std::size_t j = 0; j < S.size(); ++j) {
    double kap = S.kappa[j];
    double d = std::abs(x - 12 * kap * kap * t);
    L.radius.push_back(d > 0 ? std::min(rmax, 1.0 / d) : rmax);
  }
  L.flipped = detail::choose_flips(S, x, t);
  if (sc.has_genus()) {
    for (const auto &b : sc.genus->bands) {
      double osc = detail::oscillations(b[0], b[1], x, t);
      L.band_n.push_back(detail::even(int(std::ceil(n * (1 + osc / 6)))));
      double speed = std::max(std::abs(x + 12 * b[0] * b[0] * t), std::abs(x + 12 * b[1] * b[1] * t));
      double ry = std::min(0.25 * (b[1] - b[0]), 0.5 / std::max(speed, 1e-12));
      L.ellipse_ry.push_back(ry);
    }
  }
  if (sc.has_reflection()) {
    const auto &R = *sc.reflection;
    L.K = R.truncation();
    double osc = detail::oscillations(-L.K, L.K, x, t);
    L.disp_n = detail::even(n * (1 + int(osc / 6) + int(std::ceil(L.K / (2 * R.width)))));
  }
  return L;
}

// ---------------------------------------------------------------------------------------------
// Jump matrices

namespace detail {

struct SolitonJumps {
  std::vector<double> kappa;
  std::vector<cplx> C;
  std::vector<bool> flipped;

  // prod over flipped solitons except `skip` of ((k - i kappa)/(k + i kappa))^2
  cplx tau(cplx k, int skip = -1) const {
    cplx r = 1.0;
    for (std::size_t j = 0; j < kappa.size(); ++j)
      if (flipped[j] && int(j) != skip) {
        cplx f = (k - I * kappa[j]) / (k + I * kappa[j]);
        r *= f * f;
      }
    return r;
  }
  // square root of tau without branch cuts
  cplx tau_half(cplx k) const {
    cplx r = 1.0;
    for (std::size_t j = 0; j < kappa.size(); ++j)
      if (flipped[j]) r *= (k - I * kappa[j]) / (k + I * kappa[j]);
    return r;
  }
  // conjugate an x-independent jump by diag(tau^{-1/2}, tau^{1/2})
  Mat2 dress(Mat2 V, cplx k) const {
    cplx tt = tau(k);
    V(0, 1) /= tt;
    V(1, 0) *= tt;
    return V;
  }
  Mat2 upper(std::size_t j, cplx k) const {
    Mat2 V = Mat2::Identity();
    cplx ik = I * kappa[j];
    if (!flipped[j]) V(1, 0) = -C[j] / (k - ik) * tau(k);
    else V(0, 1) = -(k + ik) * (k + ik) / (C[j] * (k - ik)) / tau(k, int(j));
    return V;
  }
  Mat2 lower(std::size_t j, cplx k) const {
    Mat2 s2 = sigma2();
    Mat2 Vu = upper(j, std::conj(k));
    return s2 * inverse2(Vu.conjugate()) * s2;
  }
};

// Solution of N+ = N- W on [a,b] with W = [[0, e^{i w}], [-e^{-i w}, 0]], N -> I at infinity.
inline Mat2 band_parametrix(cplx k, double a, double b, double w) {
  cplx beta = std::pow((k - b) / (k - a), 0.25);
  cplx p = 0.5 * (beta + 1.0 / beta), m = (beta - 1.0 / beta) / (2.0 * I);
  cplx e = std::exp(I * w);
  Mat2 N;
  N << p, m * e, -m / e, p;
  return N;
}

inline MatC chebyshev_T(const std::vector<double> &s, int n) {
  MatC T(s.size(), n);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double th = std::acos(std::clamp(s[i], -1.0, 1.0));
    for (int m = 0; m < n; ++m) T(i, m) = std::cos(m * th);
  }
  return T;
}

} // namespace detail

struct ComposeOptions {
  bool symmetric = true; // use the Phi(-k) = Phi(k) sigma2 reduction
};

// Assemble the RHP for the scenario at (x,t) using the given layout.
inline RHProblem compose(const Scenario &sc, double x, double t, const Layout &L, ComposeOptions opt = {}) {
  RHProblem pb;
  pb.tol = sc.numerics.tol;
  {
    std::ostringstream os;
    os.precision(17);
    os << "(x,t)=(" << x << "," << t << ")";
    pb.label = os.str();
  }
  int n = sc.numerics.n;
  auto &pieces = pb.contour.pieces;
  std::vector<int> mirror;
  auto add = [&](ContourPiece p, JumpFunction G, int mir) {
    pieces.push_back(std::move(p));
    JumpFunction Gx = [G](cplx k) { return x_derivative_of_conjugated(G(k), k); };
    pb.jump.push_back(std::move(G));
    pb.jump_x.push_back(std::move(Gx));
    mirror.push_back(mir);
  };
  ThetaPhase th{x, t};

  auto sj = std::make_shared<detail::SolitonJumps>();
  const auto &S = sc.solitons;
  for (std::size_t j = 0; j < S.size(); ++j) {
    sj->kappa.push_back(S.kappa[j]);
    sj->C.push_back(2.0 * I * S.kappa[j] / S.c[j]);
    sj->flipped.push_back(L.flipped[j]);
  }

  for (std::size_t j = 0; j < S.size(); ++j) {
    double kap = S.kappa[j], r = L.radius[j];
    int base = int(pieces.size());
    bool omit = std::find(S.omit_lower.begin(), S.omit_lower.end(), int(j)) != S.omit_lower.end();
    add(make_circle(I * kap, r, 1, n), [sj, j, th](cplx k) { return conjugate_by_theta(sj->upper(j, k), th(k)); },
        omit ? -1 : base + 1);
    if (!omit) add(make_circle(-I * kap, r, -1, n), [sj, j, th](cplx k) { return conjugate_by_theta(sj->lower(j, k), th(k)); }, base);
  }

  std::vector<int> band_primary;
  if (sc.has_genus()) {
    const auto &G = *sc.genus;
    for (std::size_t j = 0; j < G.size(); ++j) {
      double a = G.bands[j][0], b = G.bands[j][1], w = G.phases[j];
      int base = int(pieces.size());
      if (G.mode == BandMode::segment) {
        int N = 4 * L.band_n[j];
        auto VP = [sj, w](cplx k) {
          Mat2 V;
          V << 0.0, std::exp(I * w), -std::exp(-I * w), 0.0;
          return sj->dress(V, k);
        };
        add(make_segment(a, b, N, SegmentBasis::band), [VP, th](cplx k) { return conjugate_by_theta(VP(k), th(k)); }, base + 1);
        add(make_segment(-b, -a, N, SegmentBasis::band),
            [VP, th](cplx k) { return conjugate_by_theta(Mat2(VP(-std::conj(k)).conjugate()), th(k)); }, base);
        band_primary.push_back(base);
      } else {
        double m = 0.5 * sc.numerics.gap;
        double rx = 0.5 * (b - a) + m, ry = L.ellipse_ry[j];
        cplx c = 0.5 * (a + b);
        int N = 4 * L.band_n[j];
        // M(k) = T N T^{-1}, T = e^{-theta sigma3} tau^{-sigma3/2}
        auto Mloc = [sj, a, b, w, th](cplx k) {
          Mat2 Nm = detail::band_parametrix(k, a, b, w);
          cplx e = std::exp(-th(k)) / sj->tau_half(k);
          Nm(0, 1) *= e * e;
          Nm(1, 0) /= e * e;
          return Nm;
        };
        // these jumps carry their own x-dependence: supply G directly
        pieces.push_back(make_ellipse(c, rx, ry, 1, N));
        pb.jump.push_back([Mloc](cplx k) { return inverse2(Mloc(k)); });
        pb.jump_x.push_back([Mloc](cplx k) { return x_derivative_of_conjugated(inverse2(Mloc(k)), k); });
        mirror.push_back(base + 1);
        pieces.push_back(make_ellipse(-c, rx, ry, -1, N));
        pb.jump.push_back([Mloc](cplx k) { Mat2 s2 = sigma2(); return Mat2(s2 * Mloc(-k) * s2); });
        pb.jump_x.push_back([Mloc](cplx k) {
          Mat2 s2 = sigma2();
          return x_derivative_of_conjugated(Mat2(s2 * Mloc(-k) * s2), k);
        });
        mirror.push_back(base);
      }
    }
  }

  if (sc.has_reflection()) {
    ReflectionSpec R = *sc.reflection;
    auto V = [sj, R](cplx k) {
      cplx r = R.rho(k), rs = R.rho_star(k);
      Mat2 m;
      m << 1.0 - r * rs, -rs, r, 1.0;
      return sj->dress(m, k);
    };
    int base = int(pieces.size());
    add(make_segment(-L.K, L.K, L.disp_n), [V, th](cplx k) { return conjugate_by_theta(V(k), th(k)); }, base);
  }

  // Band densities are written through two coefficient vectors p, q of length nb: the first
  // component is (p w + q / w) / 2 and the second follows from the jump, which leaves 2 nb
  // equations at nb first-kind points.
  auto band_map = [&](const ContourPiece &P, int nb, double w) {
    int Np = P.n / 2;
    std::vector<double> sN(Np);
    for (int l = 0; l < Np; ++l) sN[l] = std::cos(pi * (l + 0.5) / Np);
    MatC Tinv = detail::chebyshev_T(sN, Np).inverse();
    MatC Tb = detail::chebyshev_T(sN, nb);
    VecC f(Np), fx(Np);
    for (int l = 0; l < Np; ++l) {
      cplx k = P.mid() + P.half() * sN[l];
      f[l] = std::exp(-2.0 * th(k)) / sj->tau(k);
      fx[l] = -2.0 * I * k * f[l];
    }
    MatC M = Tinv * f.asDiagonal() * Tb, Mx = Tinv * fx.asDiagonal() * Tb;
    cplx c = std::exp(I * w) / (2.0 * I);
    PieceReduction pr;
    pr.map = MatC::Zero(2 * P.n, 2 * nb);
    pr.map_x = MatC::Zero(2 * P.n, 2 * nb);
    pr.map.block(0, 0, nb, nb).setIdentity();
    pr.map.block(Np, nb, nb, nb).setIdentity();
    pr.map.topRows(P.n) *= 0.5;
    pr.map.block(P.n, 0, Np, nb) = c * M;
    pr.map.block(P.n + Np, nb, Np, nb) = -c * M;
    pr.map_x.block(P.n, 0, Np, nb) = c * Mx;
    pr.map_x.block(P.n + Np, nb, Np, nb) = -c * Mx;
    for (int l = 0; l < nb; ++l) pr.points.push_back(detail::first_kind(l, nb));
    return pr;
  };
  bool band_segments = sc.has_genus() && sc.genus->mode == BandMode::segment;
  if (band_segments) {
    pb.unreduced = general_reduction(pb.contour);
    for (std::size_t j = 0; j < sc.genus->size(); ++j) {
      int i = band_primary[j];
      pb.unreduced[i] = band_map(pieces[i], L.band_n[j], sc.genus->phases[j]);
      pb.unreduced[i + 1] = band_map(pieces[i + 1], L.band_n[j], -sc.genus->phases[j]);
    }
  }
  if (opt.symmetric && std::find(mirror.begin(), mirror.end(), -1) == mirror.end()) {
    pb.reduction = symmetric_reduction(pb.contour, mirror);
    if (band_segments)
      for (int i : band_primary) pb.reduction[i] = pb.unreduced[i];
  }
  return pb;
}

inline RHProblem compose(const Scenario &sc, double x, double t, ComposeOptions opt = {}) {
  return compose(sc, x, t, layout(sc, x, t), opt);
}

} // namespace rhkdv
