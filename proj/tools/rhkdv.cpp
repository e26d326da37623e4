// rhkdv: command-line front end for the KdV Riemann-Hilbert solver.
//
//   rhkdv solve      --scenario F --x X --t T
//   rhkdv grid       --scenario F --x A:B:H --t LIST [--out DIR] [--format csv|json] [--plot]
//   rhkdv experiment regions|nonlocality|peaks --scenario F [...] [--out DIR]
//   rhkdv validate   --scenario F
//
// Exit codes: 0 success, 2 parse or usage error, 3 solver failure, 4 scenario incompatible with
// the experiment, 5 symmetry violation.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rhkdv/analysis.hpp"
#include "svg.hpp"

#ifndef RHKDV_VERSION
#define RHKDV_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace rhkdv;
using nlohmann::json;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
  case ErrorKind::parse:
  case ErrorKind::invalid_argument: return 2;
  case ErrorKind::solver: return 3;
  case ErrorKind::incompatible: return 4;
  case ErrorKind::symmetry: return 5;
  }
  return 3;
}

std::string g17(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

// JSON text with every number at 17 significant digits; nlohmann handles string escaping.
void dump(const json &j, std::string &o, int indent, int depth) {
  std::string pad(std::size_t(indent * (depth + 1)), ' '), end(std::size_t(indent * depth), ' ');
  switch (j.type()) {
  case json::value_t::object: {
    if (j.empty()) { o += "{}"; return; }
    o += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) o += ",\n";
      first = false;
      o += pad + json(it.key()).dump() + ": ";
      dump(it.value(), o, indent, depth + 1);
    }
    o += "\n" + end + "}";
    return;
  }
  case json::value_t::array: {
    if (j.empty()) { o += "[]"; return; }
    bool flat = std::all_of(j.begin(), j.end(), [](const json &v) { return v.is_primitive(); });
    if (flat) {
      o += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) o += ", ";
        dump(j[i], o, indent, depth + 1);
      }
      o += "]";
      return;
    }
    o += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) o += ",\n";
      o += pad;
      dump(j[i], o, indent, depth + 1);
    }
    o += "\n" + end + "]";
    return;
  }
  case json::value_t::number_float: {
    double v = j.get<double>();
    o += std::isfinite(v) ? g17(v) : "null";
    return;
  }
  default: o += j.dump();
  }
}

std::string dump(const json &j) {
  std::string o;
  dump(j, o, 2, 0);
  return o + "\n";
}

void write_file(const fs::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorKind::invalid_argument, "cannot write " + p.string());
  out << text;
}

GridSpec parse_range(const std::string &s) {
  GridSpec g;
  double v[3];
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t next = s.find(':', pos);
    if ((i < 2) != (next != std::string::npos))
      fail(ErrorKind::invalid_argument, "--x expects A:B:H, got \"" + s + "\"");
    std::string part = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      std::size_t used;
      v[i] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception &) {
      fail(ErrorKind::invalid_argument, "--x: \"" + part + "\" is not a number");
    }
    pos = next + 1;
  }
  g.a = v[0], g.b = v[1], g.h = v[2];
  if (!(g.h > 0) || !(g.b >= g.a)) fail(ErrorKind::invalid_argument, "--x expects A <= B and H > 0");
  return g;
}

std::vector<double> parse_list(const std::string &s, const std::string &flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception &) {
      fail(ErrorKind::invalid_argument, flag + ": \"" + item + "\" is not a number");
    }
  }
  if (out.empty()) fail(ErrorKind::invalid_argument, flag + ": empty list");
  return out;
}

// "A:B:N" gives N equally spaced values from A to B; anything else is a comma-separated list.
std::vector<double> parse_times(const std::string &s) {
  if (s.find(':') == std::string::npos) return parse_list(s, "--t");
  std::string r = s;
  std::replace(r.begin(), r.end(), ':', ',');
  auto v = parse_list(r, "--t");
  if (v.size() != 3 || v[2] < 1 || v[2] != std::floor(v[2])) fail(ErrorKind::invalid_argument, "--t expects a list or A:B:N");
  std::vector<double> t;
  int n = int(v[2]);
  for (int i = 0; i < n; ++i) t.push_back(n == 1 ? v[0] : v[0] + (v[1] - v[0]) * i / (n - 1));
  return t;
}

std::string time_tag(double t) {
  char b[40];
  std::snprintf(b, sizeof b, "%g", t);
  return b;
}

struct Run {
  std::string command;
  json params = json::object();
  json files = json::array();
  json failures = json::array();
  std::string hash;
  json scenario;
  fs::path out;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void add(const std::string &name, const std::string &text) {
    write_file(out / name, text);
    files.push_back(name);
  }
  void note_gaps(const SampledField &f, const std::string &which = "") {
    for (std::size_t i = 0; i < f.gaps.size(); ++i)
      failures.push_back({{"scenario", which.empty() ? "main" : which}, {"t", f.t}, {"x", f.x(f.gaps[i])},
                          {"message", f.gap_messages[i]}});
  }
  void finish() {
    json m;
    m["command"] = command;
    m["tool_version"] = RHKDV_VERSION;
    m["scenario_hash"] = hash;
    m["scenario"] = scenario;
    m["parameters"] = params;
    m["files"] = files;
    m["failures"] = failures;
    m["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(out / "manifest.json", dump(m));
  }
};

std::string csv(const SampledField &f) {
  std::string o = "x,q\n";
  for (std::size_t i = 0; i < f.size(); ++i) o += g17(f.x(i)) + "," + g17(f.q[i]) + "\n";
  return o;
}

json field_json(const SampledField &f) {
  json x = json::array(), q = json::array();
  for (std::size_t i = 0; i < f.size(); ++i) x.push_back(f.x(i)), q.push_back(f.q[i]);
  return {{"t", f.t}, {"h", f.h}, {"scenario_hash", f.scenario_hash}, {"x", x}, {"q", q}};
}

svg::Series curve(const SampledField &f, const std::string &color = "#1f4e9c", const std::string &label = "") {
  svg::Series s;
  for (std::size_t i = 0; i < f.size(); ++i) s.x.push_back(f.x(i)), s.y.push_back(f.q[i]);
  s.color = color;
  s.label = label;
  return s;
}

json spectrum_json(const SpectrumReport &r) {
  json fu = json::array();
  for (const auto &p : r.fundamentals) fu.push_back({{"frequency", p.frequency}, {"amplitude", p.amplitude}, {"bin", p.bin}});
  return {{"window", {r.window.x1, r.window.x2}}, {"samples", r.samples}, {"bin_width", r.bin_width},
          {"floor", r.floor}, {"peaks", r.peaks.size()}, {"fundamentals", fu}};
}

// q(x) with the asymptotic windows shaded and one spectrum panel per window underneath.
std::string field_plot(const SampledField &f, const std::vector<SpectrumReport> &spectra) {
  std::vector<svg::Panel> panels;
  double W = 900;
  svg::Panel main;
  main.width = W;
  main.height = 340;
  main.title = "q(x, t) at t = " + time_tag(f.t);
  main.xlabel = "x";
  main.ylabel = "q";
  main.series.push_back(curve(f));
  for (const auto &s : spectra) main.bands.push_back({s.window.x1, s.window.x2});
  panels.push_back(main);
  double H = main.height;
  if (!spectra.empty()) {
    double w = W / double(spectra.size());
    for (std::size_t i = 0; i < spectra.size(); ++i) {
      svg::Panel p;
      p.left = double(i) * w;
      p.top = H;
      p.width = w;
      p.height = 200;
      p.font = 10;
      p.title = "region " + std::to_string(i + 1) + ": [" + time_tag(spectra[i].window.x1) + ", " +
                time_tag(spectra[i].window.x2) + "]";
      p.xlabel = "frequency";
      p.ylabel = "|DFT|";
      svg::Series s;
      s.x = spectra[i].frequency;
      s.y = spectra[i].amplitude;
      s.color = "#9c1f3a";
      p.series.push_back(s);
      panels.push_back(p);
    }
    H += 200;
  }
  return svg::render(panels, W, H);
}

// Windows and spectra for a field; empty when the windows collapse or are too short.
std::vector<SpectrumReport> try_spectra(const Scenario &sc, const SampledField &f, json *note) {
  std::vector<SpectrumReport> out;
  try {
    for (const auto &w : asymptotic_regions(sc, f.t, f.x0, f.x_end())) out.push_back(region_spectrum(f, w));
  } catch (const Error &e) {
    if (e.kind() != ErrorKind::invalid_argument) throw;
    out.clear();
    if (note) *note = std::string("no spectrum insets at t=") + time_tag(f.t) + ": " + e.what();
  }
  return out;
}

void prepare(Run &run, const Scenario &sc, const std::string &dir) {
  run.out = dir;
  std::error_code ec;
  fs::create_directories(run.out, ec);
  if (ec) fail(ErrorKind::invalid_argument, "cannot create output directory " + dir + ": " + ec.message());
  run.hash = scenario_hash(sc);
  run.scenario = to_json(sc);
}

// ---------------------------------------------------------------------------------------------

struct Options {
  std::string scenario, background, x = "", t = "0", out = ".", format = "csv", name;
  double xs = 0, ts = 0;
  bool plot = false;
  unsigned threads = 0;
};

int cmd_solve(const Options &o) {
  Scenario sc = load_scenario(o.scenario);
  auto r = reconstruct(sc, o.xs, o.ts);
  auto pb = compose(sc, o.xs, o.ts);
  auto sym = validate_symmetries(pb);
  std::printf("q = %.16f\n", r.q);
  std::printf("imag = %.3e\n", r.imag);
  std::printf("residual = %.3e\n", r.residual);
  std::printf("residual_x = %.3e\n", r.residual_x);
  std::printf("condition = %.3e\n", r.condition);
  std::printf("pieces = %zu, unknowns = %d\n", r.pieces, r.unknowns);
  std::printf("symmetry: det = %.3e, conjugation = %.3e, inverse = %.3e\n", sym.det, sym.conjugation, sym.inverse);
  return 0;
}

int cmd_grid(const Options &o) {
  Scenario sc = load_scenario(o.scenario);
  GridSpec g = parse_range(o.x);
  auto ts = parse_list(o.t, "--t");
  Run run;
  run.command = "grid";
  run.params = {{"x", o.x}, {"t", ts}, {"format", o.format}, {"plot", o.plot}};
  prepare(run, sc, o.out);
  json notes = json::array();
  for (double t : ts) {
    auto f = sample_grid(sc, g, t, o.threads);
    run.note_gaps(f);
    std::string base = "q_t" + time_tag(t);
    if (o.format == "csv") run.add(base + ".csv", csv(f));
    else run.add(base + ".json", dump(field_json(f)));
    if (o.plot) {
      json note;
      auto spectra = try_spectra(sc, f, &note);
      if (!note.is_null()) notes.push_back(note);
      run.add(base + ".svg", field_plot(f, spectra));
    }
  }
  if (!notes.empty()) run.params["plot_notes"] = notes;
  run.finish();
  std::printf("wrote %zu files to %s\n", run.files.size(), o.out.c_str());
  return 0;
}

int cmd_regions(const Options &o, Run &run, const Scenario &sc) {
  GridSpec g = parse_range(o.x);
  json reports = json::array();
  bool all = true;
  for (double t : parse_list(o.t, "--t")) {
    auto windows = asymptotic_regions(sc, t, g.a, g.b);
    auto f = sample_grid(sc, g, t, o.threads);
    run.note_gaps(f);
    std::vector<SpectrumReport> spectra;
    for (const auto &w : windows) spectra.push_back(region_spectrum(f, w));
    // same number of fundamentals everywhere, and matching frequencies within the coarser bin
    bool same = true;
    double spread = 0;
    for (const auto &a : spectra)
      for (const auto &b : spectra) {
        if (a.fundamentals.size() != b.fundamentals.size()) {
          same = false;
          continue;
        }
        for (std::size_t k = 0; k < a.fundamentals.size(); ++k) {
          double d = std::abs(a.fundamentals[k].frequency - b.fundamentals[k].frequency) / std::max(a.bin_width, b.bin_width);
          spread = std::max(spread, d);
          if (d > 1) same = false;
        }
      }
    all = all && same;
    json rep = {{"t", t}, {"regions", windows.size()}, {"consistent", same}, {"max_spread_bins", spread}};
    for (const auto &s : spectra) rep["windows"].push_back(spectrum_json(s));
    reports.push_back(rep);
    std::string base = "regions_t" + time_tag(t);
    run.add(base + ".csv", csv(f));
    run.add(base + ".svg", field_plot(f, spectra));
    std::printf("t = %s: %zu regions, fundamentals %s\n", time_tag(t).c_str(), windows.size(),
                same ? "consistent" : "NOT consistent");
  }
  run.add("regions.json", dump({{"experiment", "regions"}, {"consistent", all}, {"reports", reports}}));
  return 0;
}

int cmd_nonlocality(const Options &o, Run &run, const Scenario &full) {
  Scenario bg = o.background.empty() ? full.without_reflection().without_solitons() : load_scenario(o.background);
  GridSpec g = parse_range(o.x);
  auto ts = parse_list(o.t, "--t");
  if (ts.size() != 1) fail(ErrorKind::invalid_argument, "nonlocality: exactly one --t value expected");
  auto r = nonlocality_diff(full, bg, ts[0], g, o.threads);
  run.note_gaps(r.full);
  run.note_gaps(r.background, "background");
  run.params["background_hash"] = scenario_hash(bg);
  json rep = {{"experiment", "nonlocality"}, {"t", ts[0]}, {"left_rms", r.left_rms}, {"right_rms", r.right_rms},
              {"ratio", r.ratio()}, {"shift", r.shift}, {"shift_rms", r.shift_rms}, {"background_rms", r.background_rms},
              {"shift_relative", r.shift_relative()}, {"grid_step", g.h}};
  run.add("nonlocality.json", dump(rep));
  std::string data = "x,q2,q1,diff\n";
  for (std::size_t i = 0; i < r.diff.size(); ++i)
    data += g17(r.full.x(i)) + "," + g17(r.full.q[i]) + "," + g17(r.background.q[i]) + "," + g17(r.diff[i]) + "\n";
  run.add("nonlocality.csv", data);

  svg::Panel top, bottom;
  top.width = bottom.width = 900;
  top.height = bottom.height = 300;
  bottom.top = 300;
  top.title = "full (q2) and background (q1) at t = " + time_tag(ts[0]);
  top.series.push_back(curve(r.background, "#888888", "q1"));
  top.series.push_back(curve(r.full, "#1f4e9c", "q2"));
  bottom.title = "q2 - q1";
  bottom.xlabel = "x";
  SampledField d = r.full;
  d.q = r.diff;
  bottom.series.push_back(curve(d, "#9c1f3a"));
  run.add("nonlocality.svg", svg::render({top, bottom}, 900, 600));
  std::printf("left_rms = %.6e\nright_rms = %.6e\nratio = %.6e\nshift = %.6f\nshift_relative = %.6e\n", r.left_rms,
              r.right_rms, r.ratio(), r.shift, r.shift_relative());
  return 0;
}

int cmd_peaks(const Options &o, Run &run, const Scenario &sc) {
  require_peak_scenario(sc);
  auto ts = parse_times(o.t);
  auto tr = peak_track(sc, ts, o.threads);
  json sol = json::array();
  std::vector<svg::Panel> panels;
  for (std::size_t j = 0; j < tr.m.size(); ++j) {
    json s = {{"kappa", tr.kappa[j]}, {"phi", tr.phi[j]}};
    svg::Series full, up, lo;
    for (const auto &p : tr.m[j]) {
      s["t"].push_back(p.t);
      s["centre"].push_back(p.centre);
      s["max_full"].push_back(p.max_full);
      s["upper"].push_back(p.upper);
      s["lower"].push_back(p.lower);
      s["argmax"].push_back(p.argmax);
      s["exited"].push_back(p.exited);
      full.x.push_back(p.t), full.y.push_back(p.max_full);
      up.x.push_back(p.t), up.y.push_back(p.upper);
      lo.x.push_back(p.t), lo.y.push_back(p.lower);
    }
    sol.push_back(s);
    full.label = "max q";
    up.label = "upper";
    lo.label = "lower";
    up.dashed = lo.dashed = true;
    up.color = "#9c1f3a";
    lo.color = "#2f7d32";
    svg::Panel p;
    p.top = 280.0 * double(j);
    p.width = 900;
    p.height = 280;
    p.title = "soliton " + std::to_string(j + 1) + ", kappa = " + time_tag(tr.kappa[j]);
    p.xlabel = "t";
    p.series = {full, up, lo};
    panels.push_back(p);
  }
  json rep = {{"experiment", "peaks"}, {"interval", tr.interval}, {"solitons", sol},
              {"lower_fraction", tr.lower_fraction()}, {"upper_fraction", tr.upper_fraction()},
              {"max_overshoot", tr.max_overshoot()}, {"exits", tr.exits()}};
  run.add("peaks.json", dump(rep));
  run.add("peaks.svg", svg::render(panels, 900, 280.0 * double(std::max<std::size_t>(1, panels.size()))));
  std::printf("lower_fraction = %.4f\nupper_fraction = %.4f\nmax_overshoot = %.6e\nexits = %zu\n", tr.lower_fraction(),
              tr.upper_fraction(), tr.max_overshoot(), tr.exits());
  return 0;
}

int cmd_experiment(const Options &o) {
  Scenario sc = load_scenario(o.scenario);
  Run run;
  run.command = "experiment " + o.name;
  run.params = {{"x", o.x}, {"t", o.t}, {"background", o.background}};
  if (o.name == "peaks") require_peak_scenario(sc);
  else if (o.x.empty()) fail(ErrorKind::invalid_argument, o.name + ": --x A:B:H is required");
  prepare(run, sc, o.out);
  int rc = o.name == "regions" ? cmd_regions(o, run, sc) : o.name == "nonlocality" ? cmd_nonlocality(o, run, sc) : cmd_peaks(o, run, sc);
  run.finish();
  return rc;
}

int cmd_validate(const Options &o) {
  Scenario sc = load_scenario(o.scenario);
  double worst = 0;
  bool ok = true;
  for (auto [x, t] : {std::pair{0.0, 0.0}, std::pair{5.0, 1.0}, std::pair{-5.0, 1.0}}) {
    auto pb = compose(sc, x, t);
    try {
      auto s = validate_symmetries(pb);
      double sep = pb.contour.size() > 1 ? min_separation(pb.contour) : std::numeric_limits<double>::infinity();
      std::printf("(x,t) = (%g,%g): det %.3e  conjugation %.3e  inverse %.3e  separation %.4g\n", x, t, s.det,
                  s.conjugation, s.inverse, sep);
      worst = std::max(worst, s.max());
      if (!(sep > 0)) {
        std::printf("  contour pieces intersect\n");
        ok = false;
      }
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::symmetry) throw;
      std::printf("(x,t) = (%g,%g): %s\n", x, t, e.what());
      ok = false;
    }
  }
  ok = ok && worst < 1e-8;
  if (ok) std::printf("valid (max deviation %.3e, threshold 1e-8)\n", worst);
  else std::printf("INVALID (max measured deviation %.3e, threshold 1e-8)\n", worst);
  return ok ? 0 : 5;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Riemann-Hilbert solver for KdV superposition solutions"};
  app.set_version_flag("--version", std::string(RHKDV_VERSION));
  app.require_subcommand(1);
  Options o;

  auto *solve = app.add_subcommand("solve", "Evaluate q(x,t) and print diagnostics");
  solve->add_option("--scenario", o.scenario, "Scenario file")->required();
  solve->add_option("--x", o.xs, "x")->required();
  solve->add_option("--t", o.ts, "t")->required();

  auto *grid = app.add_subcommand("grid", "Sample q on an x grid at one or more times");
  grid->add_option("--scenario", o.scenario, "Scenario file")->required();
  grid->add_option("--x", o.x, "x range A:B:H")->required();
  grid->add_option("--t", o.t, "Comma-separated times");
  grid->add_option("--out", o.out, "Output directory");
  grid->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  grid->add_flag("--plot", o.plot, "Also write an SVG per time");
  grid->add_option("--threads", o.threads, "Worker threads (default: RHKDV_THREADS or all cores)");

  auto *exp = app.add_subcommand("experiment", "Run the regions, nonlocality or peaks experiment");
  exp->add_option("name", o.name, "regions | nonlocality | peaks")->required()->check(CLI::IsMember({"regions", "nonlocality", "peaks"}));
  exp->add_option("--scenario", o.scenario, "Scenario file (the full scenario for nonlocality)")->required();
  exp->add_option("--background", o.background, "Background scenario for nonlocality (default: derived)");
  exp->add_option("--x", o.x, "x range A:B:H (regions, nonlocality)");
  exp->add_option("--t", o.t, "Times: a list, or A:B:N for peaks");
  exp->add_option("--out", o.out, "Output directory");
  exp->add_flag("--plot", o.plot, "Accepted for symmetry with grid; experiments always write SVG");
  exp->add_option("--threads", o.threads, "Worker threads");

  auto *val = app.add_subcommand("validate", "Check the jump symmetries at three sample points");
  val->add_option("--scenario", o.scenario, "Scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (o.threads == 0) o.threads = thread_count();

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (grid->parsed()) return cmd_grid(o);
    if (exp->parsed()) return cmd_experiment(o);
    if (val->parsed()) return cmd_validate(o);
  } catch (const Error &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
