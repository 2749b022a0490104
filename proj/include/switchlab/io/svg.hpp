#pragma once

// Minimal SVG charts: line plots with optional error bars, heatmaps with
// overlaid polylines, and phase portraits. Fixed viewBox, fixed number
// formatting and embedded metadata, so identical input gives identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace switchlab::io::svg {

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> err;  // optional symmetric error bars
  std::string color = "#1f77b4";
  bool markers = false;
  bool line = true;
};

struct Axes {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool zero_line = false;
  bool equal_aspect = false;
};

using Polyline = std::vector<std::pair<double, double>>;

namespace detail {

inline constexpr double kWidth = 800.0, kHeight = 500.0;
inline constexpr double kLeft = 80.0, kRight = 30.0, kTop = 50.0, kBottom = 60.0;

inline std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

inline std::string tick_label(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

struct Frame {
  double x0, x1, y0, y1;
  bool logx;
  double px(double x) const {
    const double u = logx ? (std::log10(x) - std::log10(x0)) / (std::log10(x1) - std::log10(x0)) : (x - x0) / (x1 - x0);
    return kLeft + u * (kWidth - kLeft - kRight);
  }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

inline std::vector<double> nice_ticks(double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

inline void open(std::ostringstream& o, const Metadata& meta, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
    << "\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<metadata>\n";
  for (const auto& [k, v] : meta) o << "  <entry key=\"" << esc(k) << "\" value=\"" << esc(v) << "\"/>\n";
  o << "</metadata>\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(kWidth / 2) << "\" y=\"25\" text-anchor=\"middle\" font-size=\"15\">" << esc(title)
    << "</text>\n";
}

inline void axes(std::ostringstream& o, const Frame& f, const Axes& ax) {
  const double l = kLeft, r = kWidth - kRight, t = kTop, b = kHeight - kBottom;
  o << "<rect x=\"" << num(l) << "\" y=\"" << num(t) << "\" width=\"" << num(r - l) << "\" height=\"" << num(b - t)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  std::vector<double> xt;
  if (f.logx) {
    for (double e = std::ceil(std::log10(f.x0) - 1e-12); e <= std::log10(f.x1) + 1e-12; e += 1.0) xt.push_back(std::pow(10.0, e));
  } else {
    xt = nice_ticks(f.x0, f.x1);
  }
  for (double v : xt) {
    const double x = f.px(v);
    o << "<line x1=\"" << num(x) << "\" y1=\"" << num(b) << "\" x2=\"" << num(x) << "\" y2=\"" << num(b + 5)
      << "\" stroke=\"black\"/>\n<text x=\"" << num(x) << "\" y=\"" << num(b + 18) << "\" text-anchor=\"middle\">"
      << tick_label(v) << "</text>\n";
  }
  for (double v : nice_ticks(f.y0, f.y1)) {
    const double y = f.py(v);
    o << "<line x1=\"" << num(l - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(l) << "\" y2=\"" << num(y)
      << "\" stroke=\"black\"/>\n<text x=\"" << num(l - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
      << tick_label(v) << "</text>\n";
  }
  if (ax.zero_line && f.y0 < 0.0 && f.y1 > 0.0) {
    o << "<line x1=\"" << num(l) << "\" y1=\"" << num(f.py(0)) << "\" x2=\"" << num(r) << "\" y2=\"" << num(f.py(0))
      << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  }
  o << "<text x=\"" << num((l + r) / 2) << "\" y=\"" << num(kHeight - 15) << "\" text-anchor=\"middle\">"
    << esc(ax.xlabel) << "</text>\n";
  o << "<text x=\"18\" y=\"" << num((t + b) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << num((t + b) / 2) << ")\">" << esc(ax.ylabel) << "</text>\n";
}

inline void pad(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double d = std::max(1e-3, std::abs(lo) * 0.1);
    lo -= d;
    hi += d;
  } else {
    const double d = 0.05 * (hi - lo);
    lo -= d;
    hi += d;
  }
}

}  // namespace detail

[[nodiscard]] inline std::string line_plot(const std::vector<Series>& series, const Axes& ax, const Metadata& meta) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (ax.logx && !(s.x[i] > 0.0))) continue;
      const double e = i < s.err.size() && std::isfinite(s.err[i]) ? s.err[i] : 0.0;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i] - e);
      y1 = std::max(y1, s.y[i] + e);
    }
  }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (!ax.logx) detail::pad(x0, x1);
  if (ax.logx && !(x1 > x0)) x1 = x0 * 10.0;
  detail::pad(y0, y1);
  if (ax.equal_aspect) {
    // same data units per pixel on both axes
    const double w = detail::kWidth - detail::kLeft - detail::kRight;
    const double h = detail::kHeight - detail::kTop - detail::kBottom;
    const double s = std::max((x1 - x0) / w, (y1 - y0) / h);
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    x0 = cx - 0.5 * s * w, x1 = cx + 0.5 * s * w;
    y0 = cy - 0.5 * s * h, y1 = cy + 0.5 * s * h;
  }
  const detail::Frame f{x0, x1, y0, y1, ax.logx};
  std::ostringstream o;
  detail::open(o, meta, ax.title);
  detail::axes(o, f, ax);
  double ly = detail::kTop + 15;
  for (const auto& s : series) {
    if (s.line) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i]) || !std::isfinite(s.x[i])) continue;
        o << (first ? "" : " ") << detail::num(f.px(s.x[i])) << ',' << detail::num(f.py(s.y[i]));
        first = false;
      }
      o << "\"/>\n";
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || !std::isfinite(s.x[i])) continue;
      const double px = f.px(s.x[i]), py = f.py(s.y[i]);
      if (i < s.err.size() && std::isfinite(s.err[i]) && s.err[i] > 0.0) {
        o << "<line x1=\"" << detail::num(px) << "\" y1=\"" << detail::num(f.py(s.y[i] - s.err[i])) << "\" x2=\""
          << detail::num(px) << "\" y2=\"" << detail::num(f.py(s.y[i] + s.err[i])) << "\" stroke=\"" << s.color
          << "\"/>\n";
      }
      if (s.markers) {
        o << "<circle cx=\"" << detail::num(px) << "\" cy=\"" << detail::num(py) << "\" r=\"2.5\" fill=\"" << s.color
          << "\"/>\n";
      }
    }
    if (!s.label.empty()) {
      const double lx = detail::kWidth - detail::kRight - 170;
      o << "<line x1=\"" << detail::num(lx) << "\" y1=\"" << detail::num(ly - 4) << "\" x2=\"" << detail::num(lx + 20)
        << "\" y2=\"" << detail::num(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n<text x=\""
        << detail::num(lx + 25) << "\" y=\"" << detail::num(ly) << "\">" << detail::esc(s.label) << "</text>\n";
      ly += 16;
    }
  }
  o << "</svg>\n";
  return o.str();
}

/// values[j * xs.size() + i] at (xs[i], ys[j]); cells coloured blue (< 0),
/// white (0), red (> 0), NaN grey. Polylines are drawn on top in data units.
[[nodiscard]] inline std::string heatmap(const std::vector<double>& xs, const std::vector<double>& ys,
                                         const std::vector<double>& values, const std::vector<Polyline>& lines,
                                         const Axes& ax, const Metadata& meta) {
  const std::size_t nx = xs.size(), ny = ys.size();
  double vmax = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) vmax = std::max(vmax, std::abs(v));
  }
  if (!(vmax > 0.0)) vmax = 1.0;
  // cell edges halfway between grid nodes (geometric midpoints on a log axis)
  auto edges = [](const std::vector<double>& g, bool logscale) {
    std::vector<double> e(g.size() + 1);
    for (std::size_t i = 1; i < g.size(); ++i) e[i] = logscale ? std::sqrt(g[i - 1] * g[i]) : 0.5 * (g[i - 1] + g[i]);
    if (g.size() == 1) {
      e[0] = logscale ? g[0] / 1.1 : g[0] - 0.5;
      e[1] = logscale ? g[0] * 1.1 : g[0] + 0.5;
    } else {
      e[0] = logscale ? g[0] * g[0] / e[1] : 2 * g[0] - e[1];
      e[g.size()] = logscale ? g.back() * g.back() / e[g.size() - 1] : 2 * g.back() - e[g.size() - 1];
    }
    return e;
  };
  const auto ex = edges(xs, ax.logx), ey = edges(ys, false);
  const detail::Frame f{ex.front(), ex.back(), ey.front(), ey.back(), ax.logx};
  std::ostringstream o;
  detail::open(o, meta, ax.title);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double v = values[j * nx + i];
      int r = 190, g = 190, b = 190;
      if (std::isfinite(v)) {
        const double s = std::min(1.0, std::abs(v) / vmax);
        const int fade = static_cast<int>(std::lround(255.0 * (1.0 - s)));
        if (v > 0) r = 255, g = fade, b = fade;
        else r = fade, g = fade, b = 255;
      }
      const double x = f.px(ex[i]), w = f.px(ex[i + 1]) - x;
      const double y = f.py(ey[j + 1]), h = f.py(ey[j]) - y;
      char col[16];
      std::snprintf(col, sizeof col, "#%02x%02x%02x", r, g, b);
      o << "<rect x=\"" << detail::num(x) << "\" y=\"" << detail::num(y) << "\" width=\"" << detail::num(w)
        << "\" height=\"" << detail::num(h) << "\" fill=\"" << col << "\"/>\n";
    }
  }
  for (const auto& pl : lines) {
    o << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < pl.size(); ++k) {
      o << (k ? " " : "") << detail::num(f.px(pl[k].first)) << ',' << detail::num(f.py(pl[k].second));
    }
    o << "\"/>\n";
  }
  detail::axes(o, f, ax);
  o << "</svg>\n";
  return o.str();
}

/// Planar path drawn in equal aspect; arcs between switches alternate colour.
[[nodiscard]] inline std::string phase_portrait(const std::vector<double>& x1, const std::vector<double>& x2,
                                                const std::vector<int>& mode, const Axes& ax, const Metadata& meta) {
  std::vector<Series> arcs;
  for (std::size_t i = 0; i < x1.size();) {
    Series s;
    s.color = mode[i] == 0 ? "#1f77b4" : "#d62728";
    std::size_t j = i;
    for (; j < x1.size() && mode[j] == mode[i]; ++j) {
      s.x.push_back(x1[j]);
      s.y.push_back(x2[j]);
    }
    // share the switch point so the arcs join
    if (j < x1.size()) {
      s.x.push_back(x1[j]);
      s.y.push_back(x2[j]);
    }
    arcs.push_back(std::move(s));
    i = j;
  }
  if (!arcs.empty()) arcs.front().label = "mode " + std::to_string(mode.front());
  Axes a = ax;
  a.equal_aspect = true;
  return line_plot(arcs, a, meta);
}

}  // namespace switchlab::io::svg
