#pragma once
// Minimal static SVG line plots: panels with axes, ticks, polylines and shaded x-bands.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace svg {

struct Series {
  std::vector<double> x, y;
  std::string color = "#1f4e9c";
  bool dashed = false;
  double width = 1.2;
  std::string label;
};

struct Band {
  double x1, x2;
  std::string color = "#e8eef8";
};

struct Panel {
  double left = 0, top = 0, width = 600, height = 300; // placement in the figure
  std::string title, xlabel, ylabel;
  std::vector<Series> series;
  std::vector<Band> bands;
  double font = 12;
};

inline std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

inline std::string tick_label(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return b;
}

// "Nice" tick spacing for the range [lo, hi] with about n ticks.
inline double tick_step(double lo, double hi, int n) {
  double raw = (hi - lo) / std::max(1, n);
  if (!(raw > 0)) return 1.0;
  double p = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * p >= raw) return m * p;
  return 10 * p;
}

inline std::string escape(const std::string &s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

inline std::string render_panel(const Panel &p) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto &s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]), xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]), ymax = std::max(ymax, s.y[i]);
    }
  if (!(xmax > xmin)) xmin = 0, xmax = 1;
  if (!(ymax > ymin)) ymin -= 0.5, ymax += 0.5;
  double pad = 0.05 * (ymax - ymin);
  ymin -= pad, ymax += pad;

  double ml = 6.0 * p.font, mr = 1.0 * p.font, mt = 2.0 * p.font, mb = 3.2 * p.font;
  double X0 = p.left + ml, X1 = p.left + p.width - mr, Y0 = p.top + mt, Y1 = p.top + p.height - mb;
  auto sx = [&](double x) { return X0 + (x - xmin) / (xmax - xmin) * (X1 - X0); };
  auto sy = [&](double y) { return Y1 - (y - ymin) / (ymax - ymin) * (Y1 - Y0); };

  std::string o;
  for (const auto &b : p.bands) {
    double a = std::clamp(b.x1, xmin, xmax), c = std::clamp(b.x2, xmin, xmax);
    if (c <= a) continue;
    o += "<rect x=\"" + num(sx(a)) + "\" y=\"" + num(Y0) + "\" width=\"" + num(sx(c) - sx(a)) + "\" height=\"" +
         num(Y1 - Y0) + "\" fill=\"" + b.color + "\"/>\n";
  }
  o += "<rect x=\"" + num(X0) + "\" y=\"" + num(Y0) + "\" width=\"" + num(X1 - X0) + "\" height=\"" + num(Y1 - Y0) +
       "\" fill=\"none\" stroke=\"#333\" stroke-width=\"0.8\"/>\n";

  std::string fs = num(0.85 * p.font);
  double dx = tick_step(xmin, xmax, 8), dy = tick_step(ymin, ymax, 5);
  for (double v = std::ceil(xmin / dx) * dx; v <= xmax + 1e-9 * dx; v += dx) {
    o += "<line x1=\"" + num(sx(v)) + "\" y1=\"" + num(Y1) + "\" x2=\"" + num(sx(v)) + "\" y2=\"" + num(Y1 + 4) +
         "\" stroke=\"#333\" stroke-width=\"0.8\"/>\n";
    o += "<text x=\"" + num(sx(v)) + "\" y=\"" + num(Y1 + 4 + p.font) + "\" font-size=\"" + fs +
         "\" text-anchor=\"middle\">" + tick_label(v) + "</text>\n";
  }
  for (double v = std::ceil(ymin / dy) * dy; v <= ymax + 1e-9 * dy; v += dy) {
    o += "<line x1=\"" + num(X0 - 4) + "\" y1=\"" + num(sy(v)) + "\" x2=\"" + num(X0) + "\" y2=\"" + num(sy(v)) +
         "\" stroke=\"#333\" stroke-width=\"0.8\"/>\n";
    o += "<text x=\"" + num(X0 - 6) + "\" y=\"" + num(sy(v) + 0.35 * p.font) + "\" font-size=\"" + fs +
         "\" text-anchor=\"end\">" + tick_label(v) + "</text>\n";
  }
  if (!p.title.empty())
    o += "<text x=\"" + num(0.5 * (X0 + X1)) + "\" y=\"" + num(Y0 - 0.6 * p.font) + "\" font-size=\"" + num(p.font) +
         "\" text-anchor=\"middle\">" + escape(p.title) + "</text>\n";
  if (!p.xlabel.empty())
    o += "<text x=\"" + num(0.5 * (X0 + X1)) + "\" y=\"" + num(Y1 + 2.6 * p.font) + "\" font-size=\"" + fs +
         "\" text-anchor=\"middle\">" + escape(p.xlabel) + "</text>\n";
  if (!p.ylabel.empty()) {
    double cx = p.left + 1.2 * p.font, cy = 0.5 * (Y0 + Y1);
    o += "<text x=\"" + num(cx) + "\" y=\"" + num(cy) + "\" font-size=\"" + fs + "\" text-anchor=\"middle\" transform=\"rotate(-90 " +
         num(cx) + " " + num(cy) + ")\">" + escape(p.ylabel) + "</text>\n";
  }

  int legend = 0;
  for (const auto &s : p.series) {
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts += num(sx(s.x[i])) + "," + num(sy(s.y[i])) + " ";
    }
    o += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"" + num(s.width) + "\"" +
         (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + " points=\"" + pts + "\"/>\n";
    if (!s.label.empty()) {
      double ly = Y0 + (0.9 + 1.2 * legend++) * p.font;
      o += "<line x1=\"" + num(X1 - 9 * p.font) + "\" y1=\"" + num(ly - 0.3 * p.font) + "\" x2=\"" + num(X1 - 7 * p.font) +
           "\" y2=\"" + num(ly - 0.3 * p.font) + "\" stroke=\"" + s.color + "\" stroke-width=\"" + num(s.width) + "\"" +
           (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
      o += "<text x=\"" + num(X1 - 6.6 * p.font) + "\" y=\"" + num(ly) + "\" font-size=\"" + fs + "\">" + escape(s.label) +
           "</text>\n";
    }
  }
  return o;
}

inline std::string render(const std::vector<Panel> &panels, double width, double height) {
  std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
                  "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" font-family=\"sans-serif\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto &p : panels) o += render_panel(p);
  o += "</svg>\n";
  return o;
}

} // namespace svg
