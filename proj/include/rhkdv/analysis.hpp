#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "dressing.hpp"
#include "linear_reference.hpp"

namespace rhkdv {

// 64-bit FNV-1a of the canonical JSON form, as 16 hex digits.
inline std::string scenario_hash(const Scenario &sc) {
  std::string s = to_json(sc).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Number of worker threads: RHKDV_THREADS if set and positive, else the hardware count.
inline unsigned thread_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("RHKDV_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return unsigned(v);
  }
  return hw;
}

// Runs f(i) for i in [0, n) on up to `threads` workers. f must only touch slot i of its output.
template <class F> void parallel_for(std::size_t n, unsigned threads, F f) {
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
          next = n;
        }
      }
    });
  for (auto &th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------------------------
// Sampled fields

struct SampledField {
  double x0 = 0.0, h = 1.0, t = 0.0;
  std::vector<double> q;
  std::vector<std::size_t> gaps; // indices where the solver failed; q there is interpolated
  std::vector<std::string> gap_messages;
  std::string scenario_hash;

  std::size_t size() const { return q.size(); }
  double x(std::size_t i) const { return x0 + double(i) * h; }
  double x_end() const { return x(q.size() - 1); }
};

struct GridSpec {
  double a = 0.0, b = 0.0, h = 0.1;
  std::size_t count() const { return std::size_t(std::llround((b - a) / h)) + 1; }
};

namespace detail {

inline void fill_gaps(SampledField &f) {
  if (f.gaps.empty()) return;
  std::vector<bool> bad(f.size(), false);
  for (auto i : f.gaps) bad[i] = true;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!bad[i]) continue;
    std::ptrdiff_t l = std::ptrdiff_t(i) - 1, r = std::ptrdiff_t(i) + 1;
    while (l >= 0 && bad[l]) --l;
    while (r < std::ptrdiff_t(f.size()) && bad[r]) ++r;
    if (l < 0 && r >= std::ptrdiff_t(f.size())) f.q[i] = 0.0;
    else if (l < 0) f.q[i] = f.q[r];
    else if (r >= std::ptrdiff_t(f.size())) f.q[i] = f.q[l];
    else f.q[i] = f.q[l] + (f.q[r] - f.q[l]) * double(std::ptrdiff_t(i) - l) / double(r - l);
  }
}

} // namespace detail

// q on x = a, a+h, ..., b at time t. Points are independent, so the values do not depend on the
// thread count. Solver failures become gaps; more than 1% gaps fails the run.
inline SampledField sample_grid(const Scenario &sc, GridSpec g, double t, unsigned threads = thread_count()) {
  if (!(g.h > 0)) fail(ErrorKind::invalid_argument, "sample_grid: spacing must be positive");
  if (!(g.b >= g.a)) fail(ErrorKind::invalid_argument, "sample_grid: x range is empty");
  SampledField f;
  f.x0 = g.a;
  f.h = g.h;
  f.t = t;
  f.scenario_hash = scenario_hash(sc);
  std::size_t n = g.count();
  f.q.assign(n, 0.0);
  std::vector<std::string> msg(n);
  std::vector<char> bad(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      f.q[i] = reconstruct_q(sc, f.x(i), t);
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::solver) throw;
      bad[i] = 1;
      msg[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    if (bad[i]) {
      f.gaps.push_back(i);
      f.gap_messages.push_back(msg[i]);
    }
  if (double(f.gaps.size()) > 0.01 * double(n))
    fail(ErrorKind::solver, "sample_grid: " + std::to_string(f.gaps.size()) + " of " + std::to_string(n) +
                                " points failed at t=" + std::to_string(t) + "; first: " + f.gap_messages.front());
  detail::fill_gaps(f);
  return f;
}

// ---------------------------------------------------------------------------------------------
// Asymptotic regions

struct Window {
  double x1 = 0.0, x2 = 0.0;
  double length() const { return x2 - x1; }
};

// Longest wavelength of the background: pi over the smallest band midpoint. Without bands, the
// widest soliton sets the scale (1/kappa), and with nothing at all the margin is one unit.
inline double background_wavelength(const Scenario &sc) {
  if (sc.has_genus()) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto &b : sc.genus->bands) m = std::min(m, 0.5 * (b[0] + b[1]));
    return pi / m;
  }
  if (sc.has_solitons()) return 1.0 / sc.solitons.kappa.front();
  return 1.0;
}

// Left edge of the dispersive tail: stationary point where |rho| has dropped to 1e-3.
inline double dispersive_tail_left(const Scenario &sc, double t) {
  if (!sc.has_reflection()) return 0.0;
  const auto &R = *sc.reflection;
  double a = std::abs(R.amplitude);
  double k = a > 1e-3 ? R.width * std::sqrt(std::log(a / 1e-3)) : 0.0;
  return -12.0 * k * k * t;
}

// Phase of soliton j once the solitons have separated (t -> +infinity): its own offset plus the
// shift (1/kappa_j) log((kappa_m + kappa_j)/(kappa_m - kappa_j)) from every faster soliton m.
inline double asymptotic_phase(const SolitonData &S, std::size_t j) {
  double k = S.kappa[j], phi = S.phi(j);
  for (std::size_t m = 0; m < S.size(); ++m)
    if (S.kappa[m] > k) phi += std::log((S.kappa[m] + k) / (S.kappa[m] - k)) / k;
  return phi;
}

// Predicted soliton centre x = 4 kappa^2 t - phi with the asymptotic phase.
inline double soliton_centre(const Scenario &sc, std::size_t j, double t) {
  double k = sc.solitons.kappa[j];
  return 4 * k * k * t - asymptotic_phase(sc.solitons, j);
}

// n+2 windows for n solitons. The separating features are the left edge of the dispersive tail,
// the origin (where the tail ends and slow radiation sits) and the soliton trajectories; each
// window is shrunk by three background wavelengths from the features that bound it.
inline std::vector<Window> asymptotic_regions(const Scenario &sc, double t, double xa, double xb) {
  if (!(t >= 0)) fail(ErrorKind::invalid_argument, "asymptotic_regions: t must be non-negative");
  if (!(xb > xa)) fail(ErrorKind::invalid_argument, "asymptotic_regions: x range is empty");
  double m = 3 * background_wavelength(sc);
  std::vector<double> sep = {0.0};
  for (std::size_t j = 0; j < sc.solitons.size(); ++j) sep.push_back(soliton_centre(sc, j, t));
  std::sort(sep.begin(), sep.end());
  std::vector<Window> w;
  w.push_back({xa, std::min(sep.front(), dispersive_tail_left(sc, t)) - m});
  for (std::size_t j = 0; j + 1 < sep.size(); ++j) w.push_back({sep[j] + m, sep[j + 1] - m});
  w.push_back({sep.back() + m, xb});
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!(w[i].length() > 0))
      fail(ErrorKind::invalid_argument, "asymptotic_regions: window " + std::to_string(i) + " collapses at t=" +
                                            std::to_string(t) + " (features closer than the margin " + std::to_string(m) +
                                            " or outside the x range); choose a larger t or a wider range");
  return w;
}

// ---------------------------------------------------------------------------------------------
// Windowed spectra

struct SpectralPeak {
  int bin = 0;
  double frequency = 0.0; // refined by Gaussian interpolation over the three top bins
  double amplitude = 0.0;
};

struct SpectrumReport {
  Window window;
  std::size_t samples = 0;
  double bin_width = 0.0;
  std::vector<double> frequency, amplitude;
  double floor = 0.0;                    // 10 x median bin amplitude (at least 1e-12 of the signal scale)
  std::vector<SpectralPeak> peaks;       // every local maximum above the floor, ascending frequency
  std::vector<SpectralPeak> fundamentals; // peaks that are neither sidelobes nor integer combinations of stronger peaks
};

namespace detail {

// Whether f lies within tol of |sum n_i g_i| with 2 <= sum |n_i| <= order.
inline bool is_combination(double f, const std::vector<double> &g, double tol, int order = 8) {
  std::size_t d = g.size();
  if (d == 0) return false;
  std::vector<int> c(d, -order);
  for (;;) {
    int s = 0;
    double v = 0;
    for (std::size_t i = 0; i < d; ++i) {
      s += std::abs(c[i]);
      v += c[i] * g[i];
    }
    if (s >= 2 && s <= order && std::abs(std::abs(v) - f) <= tol) return true;
    std::size_t i = 0;
    while (i < d && c[i] == order) c[i++] = -order;
    if (i == d) return false;
    ++c[i];
  }
}

// Envelope of the Hann window's spectral sidelobes, relative to the main lobe, d bins away.
inline double hann_sidelobe(double d) {
  if (d < 2) return 1.0;
  return 1.0 / (pi * d * (d * d - 1));
}

} // namespace detail

// Hann-windowed DFT amplitude of the samples inside the window, scaled so a cosine of amplitude A
// on a bin centre reads A.
inline SpectrumReport region_spectrum(const SampledField &f, Window w) {
  std::vector<double> v;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.x(i) >= w.x1 - 1e-9 * f.h && f.x(i) <= w.x2 + 1e-9 * f.h) v.push_back(f.q[i]);
  if (v.size() < 64)
    fail(ErrorKind::invalid_argument, "region_spectrum: window [" + std::to_string(w.x1) + ", " + std::to_string(w.x2) +
                                          "] holds " + std::to_string(v.size()) + " samples, at least 64 required");
  std::size_t N = v.size();
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(N);
  std::vector<double> win(N);
  double wsum = 0;
  for (std::size_t i = 0; i < N; ++i) {
    win[i] = 0.5 - 0.5 * std::cos(2 * pi * double(i) / double(N - 1));
    wsum += win[i];
  }
  SpectrumReport r;
  r.window = w;
  r.samples = N;
  r.bin_width = 1.0 / (double(N) * f.h);
  std::size_t K = N / 2;
  r.frequency.resize(K + 1);
  r.amplitude.resize(K + 1);
  for (std::size_t k = 0; k <= K; ++k) {
    cplx s = 0;
    cplx step = std::exp(-2.0 * pi * I * double(k) / double(N)), e = 1.0;
    for (std::size_t i = 0; i < N; ++i) {
      s += (v[i] - mean) * win[i] * e;
      e *= step;
      if ((i & 63) == 63) e = std::exp(-2.0 * pi * I * double(k) * double(i + 1) / double(N));
    }
    r.frequency[k] = double(k) * r.bin_width;
    r.amplitude[k] = 2.0 * std::abs(s) / wsum;
  }
  std::vector<double> sorted(r.amplitude.begin() + 1, r.amplitude.end());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  // the absolute term keeps rounding noise of a flat signal below the floor
  double scale = 0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  r.floor = std::max(10.0 * sorted[sorted.size() / 2], 1e-12 * std::max(1.0, scale));
  for (std::size_t k = 1; k < K; ++k) {
    double a = r.amplitude[k];
    if (a > r.floor && a > r.amplitude[k - 1] && a >= r.amplitude[k + 1]) {
      double l = std::log(std::max(r.amplitude[k - 1], 1e-300)), c = std::log(a),
             u = std::log(std::max(r.amplitude[k + 1], 1e-300));
      double den = l - 2 * c + u;
      double d = den < 0 ? 0.5 * (l - u) / den : 0.0;
      r.peaks.push_back({int(k), (double(k) + std::clamp(d, -0.5, 0.5)) * r.bin_width, a});
    }
  }
  std::vector<SpectralPeak> by_amp = r.peaks;
  std::sort(by_amp.begin(), by_amp.end(), [](const auto &a, const auto &b) { return a.amplitude > b.amplitude; });
  std::vector<double> base;
  for (std::size_t i = 0; i < by_amp.size(); ++i) {
    const auto &p = by_amp[i];
    bool leak = false;
    for (std::size_t j = 0; j < i && !leak; ++j)
      leak = p.amplitude <= 2 * detail::hann_sidelobe(std::abs(p.frequency - by_amp[j].frequency) / r.bin_width) * by_amp[j].amplitude;
    if (leak || detail::is_combination(p.frequency, base, r.bin_width)) continue;
    base.push_back(p.frequency);
    r.fundamentals.push_back(p);
  }
  std::sort(r.fundamentals.begin(), r.fundamentals.end(), [](const auto &a, const auto &b) { return a.frequency < b.frequency; });
  return r;
}

// ---------------------------------------------------------------------------------------------
// Nonlocality

struct NonlocalityReport {
  SampledField full, background;
  std::vector<double> diff;
  double left_rms = 0.0, right_rms = 0.0;
  double ratio() const { return right_rms / left_rms; }
  double shift = 0.0;          // s minimizing RMS(q2(x) - q1(x + s)) over the left window
  double shift_rms = 0.0;      // that minimum
  double background_rms = 0.0; // RMS of q1 over the left window
  double shift_relative() const { return shift_rms / background_rms; }
};

namespace detail {

inline double rms(const std::vector<double> &v, std::size_t a, std::size_t b) {
  double s = 0;
  for (std::size_t i = a; i < b; ++i) s += v[i] * v[i];
  return std::sqrt(s / double(b - a));
}

// four-point Lagrange interpolation on a uniform grid
inline double interpolate(const SampledField &f, double x) {
  double u = (x - f.x0) / f.h;
  std::ptrdiff_t i = std::ptrdiff_t(std::floor(u)) - 1;
  i = std::clamp<std::ptrdiff_t>(i, 0, std::ptrdiff_t(f.size()) - 4);
  double s = u - double(i);
  const double *q = &f.q[std::size_t(i)];
  return -q[0] * (s - 1) * (s - 2) * (s - 3) / 6 + q[1] * s * (s - 2) * (s - 3) / 2 - q[2] * s * (s - 1) * (s - 3) / 2 +
         q[3] * s * (s - 1) * (s - 2) / 6;
}

// Golden-section search for the minimum of a unimodal f on [lo, hi]; returns the abscissa.
template <class F> double golden_min(F f, double lo, double hi, int iters) {
  const double r = 0.5 * (3.0 - std::sqrt(5.0));
  double m1 = lo + r * (hi - lo), m2 = hi - r * (hi - lo);
  double f1 = f(m1), f2 = f(m2);
  for (int it = 0; it < iters; ++it) {
    if (f1 < f2) {
      hi = m2, m2 = m1, f2 = f1;
      m1 = lo + r * (hi - lo), f1 = f(m1);
    } else {
      lo = m1, m1 = m2, f1 = f2;
      m2 = hi - r * (hi - lo), f2 = f(m2);
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace detail

// q2 - q1 on the grid, with q2 from the full scenario and q1 from its background (reflection and
// solitons removed). The background is sampled one wavelength further left so that the shift
// search over the left window stays inside the data.
inline NonlocalityReport nonlocality_diff(const Scenario &full, const Scenario &background, double t, GridSpec g,
                                          unsigned threads = thread_count()) {
  if (to_json(background) != to_json(full.without_reflection().without_solitons()))
    fail(ErrorKind::incompatible, "nonlocality: the background scenario must equal the full scenario with reflection and solitons removed");
  if (!background.has_genus()) fail(ErrorKind::incompatible, "nonlocality: a genus background is required");
  NonlocalityReport r;
  r.full = sample_grid(full, g, t, threads);
  double lam = background_wavelength(background);
  int extra = int(std::ceil(lam / g.h)) + 4;
  GridSpec gb = g;
  gb.a = g.a - extra * g.h;
  gb.b = g.b + extra * g.h;
  SampledField wide = sample_grid(background, gb, t, threads);
  r.background = wide;
  r.background.x0 = g.a;
  r.background.q.assign(wide.q.begin() + extra, wide.q.end() - extra);
  if (r.background.size() != r.full.size()) fail(ErrorKind::invalid_argument, "nonlocality: grid mismatch");
  std::size_t n = r.full.size(), m = std::max<std::size_t>(1, n / 5);
  r.diff.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.diff[i] = r.full.q[i] - r.background.q[i];
  r.left_rms = detail::rms(r.diff, 0, m);
  r.right_rms = detail::rms(r.diff, n - m, n);
  r.background_rms = detail::rms(r.background.q, 0, m);

  auto mismatch = [&](double s) {
    double acc = 0;
    for (std::size_t i = 0; i < m; ++i) {
      double d = r.full.q[i] - detail::interpolate(wide, r.full.x(i) + s);
      acc += d * d;
    }
    return std::sqrt(acc / double(m));
  };
  // The background is periodic to leading order, so the shift is only meaningful modulo one
  // wavelength: scan half a wavelength each way in grid steps, then refine by golden section.
  double best = std::numeric_limits<double>::infinity(), bs = 0;
  int reach = int(std::ceil(0.5 * lam / g.h)) + 1;
  for (int j = -reach; j <= reach; ++j) {
    double v = mismatch(j * g.h);
    if (v < best || (v == best && std::abs(j * g.h) < std::abs(bs))) best = v, bs = j * g.h;
  }
  r.shift = detail::golden_min(mismatch, bs - g.h, bs + g.h, 60);
  r.shift_rms = mismatch(r.shift);
  return r;
}

// ---------------------------------------------------------------------------------------------
// Peak tracking

struct PeakSample {
  double t = 0.0;
  double centre = 0.0;     // I_m(t) = [centre - 0.4, centre + 0.4]
  double max_full = 0.0, upper = 0.0, lower = 0.0;
  double argmax = 0.0;
  bool exited = false;     // maximum attained on the boundary of I_m(t)
};

struct PeakTrack {
  std::vector<double> kappa;
  std::vector<double> phi;                 // measured per soliton
  std::vector<std::vector<PeakSample>> m;  // m[j][i]: soliton j at t-grid index i
  double interval = 0.8;
  std::size_t points = 17;                 // samples of I_m(t) before refinement

  double lower_fraction() const {
    std::size_t ok = 0, n = 0;
    for (const auto &s : m)
      for (const auto &p : s) ok += p.max_full >= p.lower, ++n;
    return n ? double(ok) / double(n) : 0.0;
  }
  double upper_fraction() const {
    std::size_t ok = 0, n = 0;
    for (const auto &s : m)
      for (const auto &p : s) ok += p.max_full <= p.upper, ++n;
    return n ? double(ok) / double(n) : 0.0;
  }
  double max_overshoot() const {
    double o = 0;
    for (const auto &s : m)
      for (const auto &p : s) o = std::max(o, p.max_full - p.upper);
    return o;
  }
  std::size_t exits() const {
    std::size_t e = 0;
    for (const auto &s : m)
      for (const auto &p : s) e += p.exited;
    return e;
  }
};

// Centre offsets phi_m read off a solitons-only solve at a time where the solitons are well apart.
inline std::vector<double> measure_phases(const Scenario &solitons_only) {
  const auto &S = solitons_only.solitons;
  std::size_t n = S.size();
  double T = 10.0;
  for (std::size_t j = 0; j + 1 < n; ++j)
    T = std::max(T, 12.0 / (4 * (S.kappa[j + 1] * S.kappa[j + 1] - S.kappa[j] * S.kappa[j]) * S.kappa[j]));
  std::vector<double> phi(n);
  for (std::size_t j = 0; j < n; ++j) {
    double guess = soliton_centre(solitons_only, j, T);
    auto q = [&](double x) { return reconstruct_q(solitons_only, x, T); };
    double best = -1, bx = guess;
    for (double x = guess - 3; x <= guess + 3; x += 0.1) {
      double v = q(x);
      if (v > best) best = v, bx = x;
    }
    double k = S.kappa[j];
    phi[j] = 4 * k * k * T - detail::golden_min([&](double x) { return -q(x); }, bx - 0.1, bx + 0.1, 40);
  }
  return phi;
}

inline void require_peak_scenario(const Scenario &sc) {
  if (!sc.has_solitons()) fail(ErrorKind::incompatible, "peaks: the scenario needs at least one soliton");
  if (!sc.has_genus()) fail(ErrorKind::incompatible, "peaks: the scenario needs a genus block (finite-gap background)");
  if (sc.has_reflection()) fail(ErrorKind::incompatible, "peaks: remove the reflection block (no dispersion)");
}

// For each soliton m and each t: max of q_full over I_m(t) and the bounds max/min over I_m(t) of
// q_fg + 2 kappa_m^2, where q_fg is the genus background alone.
inline PeakTrack peak_track(const Scenario &sc, const std::vector<double> &tgrid, unsigned threads = thread_count()) {
  require_peak_scenario(sc);
  PeakTrack tr;
  tr.kappa = sc.solitons.kappa;
  Scenario sol = sc.without_genus(), fg = sc.without_solitons();
  tr.phi = measure_phases(sol);
  std::size_t n = tr.kappa.size(), P = tr.points;
  tr.m.assign(n, std::vector<PeakSample>(tgrid.size()));
  parallel_for(n * tgrid.size(), threads, [&](std::size_t idx) {
    std::size_t j = idx / tgrid.size(), i = idx % tgrid.size();
    double t = tgrid[i], k = tr.kappa[j];
    PeakSample s;
    s.t = t;
    s.centre = 4 * k * k * t - tr.phi[j];
    double a = s.centre - 0.5 * tr.interval, h = tr.interval / double(P - 1);
    std::vector<double> qf(P);
    double fmax = -1e300, fmin = 1e300;
    for (std::size_t p = 0; p < P; ++p) {
      double x = a + double(p) * h;
      qf[p] = reconstruct_q(sc, x, t);
      double g = reconstruct_q(fg, x, t);
      fmax = std::max(fmax, g);
      fmin = std::min(fmin, g);
    }
    s.upper = fmax + 2 * k * k;
    s.lower = fmin + 2 * k * k;
    std::size_t b = std::size_t(std::max_element(qf.begin(), qf.end()) - qf.begin());
    if (b == 0 || b == P - 1) {
      s.exited = true;
      s.max_full = qf[b];
      s.argmax = a + double(b) * h;
    } else {
      auto q = [&](double x) { return reconstruct_q(sc, x, t); };
      s.argmax = detail::golden_min([&](double x) { return -q(x); }, a + double(b - 1) * h, a + double(b + 1) * h, 20);
      s.max_full = std::max(qf[b], q(s.argmax));
    }
    tr.m[j][i] = s;
  });
  return tr;
}

// ---------------------------------------------------------------------------------------------
// Diagnostics

// max over interior points of |q_t + 6 q q_x + q_xxx| from equally spaced time levels: fourth-order
// central differences in x; in t the centred difference over 3 levels (second order) or 5 levels
// (fourth order).
inline double kdv_residual(const std::vector<const SampledField *> &lv) {
  if (lv.size() != 3 && lv.size() != 5) fail(ErrorKind::invalid_argument, "kdv_residual: 3 or 5 time levels required");
  const SampledField &cur = *lv[lv.size() / 2];
  for (const auto *o : lv)
    if (o->size() != cur.size() || std::abs(o->x0 - cur.x0) > 1e-12 * std::max(1.0, std::abs(cur.x0)) ||
        std::abs(o->h - cur.h) > 1e-12 * cur.h)
      fail(ErrorKind::invalid_argument, "kdv_residual: misaligned grids");
  double dt = lv[1]->t - lv[0]->t;
  for (std::size_t j = 1; j < lv.size(); ++j)
    if (!(dt > 0) || std::abs(lv[j]->t - lv[j - 1]->t - dt) > 1e-9 * dt)
      fail(ErrorKind::invalid_argument, "kdv_residual: time levels must be increasing and equally spaced");
  if (cur.size() < 7) fail(ErrorKind::invalid_argument, "kdv_residual: at least 7 points per grid required");
  double h = cur.h, res = 0;
  const auto &q = cur.q;
  for (std::size_t i = 3; i + 3 < q.size(); ++i) {
    double qx = (q[i - 2] - 8 * q[i - 1] + 8 * q[i + 1] - q[i + 2]) / (12 * h);
    double qxxx = (-q[i + 3] + 8 * q[i + 2] - 13 * q[i + 1] + 13 * q[i - 1] - 8 * q[i - 2] + q[i - 3]) / (8 * h * h * h);
    double qt = lv.size() == 3 ? (lv[2]->q[i] - lv[0]->q[i]) / (2 * dt)
                               : (lv[0]->q[i] - 8 * lv[1]->q[i] + 8 * lv[3]->q[i] - lv[4]->q[i]) / (12 * dt);
    res = std::max(res, std::abs(qt + 6 * q[i] * qx + qxxx));
  }
  return res;
}

inline double kdv_residual(const SampledField &prev, const SampledField &cur, const SampledField &next) {
  return kdv_residual({&prev, &cur, &next});
}

// Trapezoidal integral of q over the grid; the field must have decayed at both ends.
inline double conserved_mass(const SampledField &f) {
  if (f.size() < 2) fail(ErrorKind::invalid_argument, "conserved_mass: at least two samples required");
  if (std::abs(f.q.front()) > 1e-4 || std::abs(f.q.back()) > 1e-4)
    fail(ErrorKind::invalid_argument, "conserved_mass: tails do not decay (|q| > 1e-4 at the ends of the range)");
  double s = 0.5 * (f.q.front() + f.q.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f.q[i];
  return s * f.h;
}

} // namespace rhkdv
