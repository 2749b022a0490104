#pragma once

// Parameter sweeps behind the command-line front end. Each command takes a
// plain spec, evaluates its grid point by point (a failing point is recorded,
// never fatal) and writes CSV or JSON plus an optional SVG into one directory.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "switchlab/core.hpp"
#include "switchlab/deterministic.hpp"
#include "switchlab/errors.hpp"
#include "switchlab/invariant_measure.hpp"
#include "switchlab/io/config.hpp"
#include "switchlab/io/csv.hpp"
#include "switchlab/io/svg.hpp"
#include "switchlab/kesten.hpp"
#include "switchlab/parallel.hpp"
#include "switchlab/rng.hpp"
#include "switchlab/simulator.hpp"

#ifndef SWITCHLAB_VERSION
#define SWITCHLAB_VERSION "dev"
#endif

namespace switchlab::sweep {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kVersion = SWITCHLAB_VERSION;

struct OutputOptions {
  fs::path dir = ".";
  std::string format = "csv";  // csv | json
  bool svg = false;
};

struct CommandResult {
  std::size_t points = 0;
  std::size_t failed = 0;
  std::vector<fs::path> files;
  json summary = json::object();
};

namespace detail {

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline void write_file(CommandResult& res, const OutputOptions& out, const std::string& name,
                       const std::string& text) {
  fs::create_directories(out.dir);
  const fs::path p = out.dir / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write '" + p.string() + "'");
  f << text;
  res.files.push_back(p);
}

inline void write_json(CommandResult& res, const OutputOptions& out, const std::string& name, const json& j) {
  write_file(res, out, name, j.dump(2) + "\n");
}

inline io::svg::Metadata metadata(std::string command, std::vector<std::pair<std::string, std::string>> extra) {
  io::svg::Metadata m{{"generator", "switchlab"}, {"version", kVersion}, {"command", std::move(command)}};
  m.insert(m.end(), extra.begin(), extra.end());
  return m;
}

inline std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

}  // namespace detail

/// Runs of consecutive `true` values.
[[nodiscard]] inline int count_runs(const std::vector<bool>& flags) {
  int runs = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] && (i == 0 || !flags[i - 1])) ++runs;
  }
  return runs;
}

/// Number of sign changes between consecutive finite values (zeros skipped).
[[nodiscard]] inline int count_zero_crossings(const std::vector<double>& v) {
  int n = 0;
  double prev = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x == 0.0) continue;
    if (prev != 0.0 && (x > 0.0) != (prev > 0.0)) ++n;
    prev = x;
  }
  return n;
}

// ---------------------------------------------------------------- chi-profile

struct ChiProfileSpec {
  double a = 0.15, b = 3.0, u = 0.5;
  bool degenerate = false;
  double beta_min = 0.05, beta_max = 200.0;
  int points = 200;
  bool mc_overlay = false;
  int mc_points = 12;
  double mc_T = 1e4;
  int mc_replicas = 64;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct ProfileRow {
  double beta = 0.0;
  double chi = 0.0;
  std::string method;
  double err = 0.0;
  std::string status = "ok";
};

[[nodiscard]] inline std::vector<ProfileRow> chi_profile_rows(const ChiProfileSpec& s) {
  const auto betas = log_grid(s.beta_min, s.beta_max, s.points);
  auto rows = parallel_map(betas.size(), s.workers, [&](std::size_t i) {
    ProfileRow r;
    r.beta = betas[i];
    r.method = "quadrature";
    try {
      const auto c = lyapunov_chi(make_params(s.a, s.b, betas[i], s.u, s.degenerate));
      r.chi = c.value;
      r.err = c.error;
    } catch (const std::exception& e) {
      r.chi = std::numeric_limits<double>::quiet_NaN();
      r.status = std::string("failed: ") + e.what();
    }
    return r;
  });
  if (s.mc_overlay) {
    const auto mb = log_grid(s.beta_min, s.beta_max, std::max(2, s.mc_points));
    auto mc = parallel_map(mb.size(), s.workers, [&](std::size_t i) {
      ProfileRow r;
      r.beta = mb[i];
      r.method = "monte-carlo";
      try {
        const auto c = estimate_chi_mc(make_params(s.a, s.b, mb[i], s.u, s.degenerate), SwitchingLaw::exponential(),
                                       s.mc_T, s.mc_replicas, stream_seed(s.seed, i));
        r.chi = c.value;
        r.err = c.error;
        if (!c.warnings.empty()) r.status = "ok; " + c.warnings.front();
      } catch (const std::exception& e) {
        r.chi = std::numeric_limits<double>::quiet_NaN();
        r.status = std::string("failed: ") + e.what();
      }
      return r;
    });
    rows.insert(rows.end(), mc.begin(), mc.end());
  }
  return rows;
}

inline CommandResult cmd_chi_profile(const ChiProfileSpec& s, const OutputOptions& out) {
  const auto rows = chi_profile_rows(s);
  CommandResult res;
  res.points = rows.size();
  std::vector<double> quad;
  for (const auto& r : rows) {
    if (r.status.rfind("failed", 0) == 0) ++res.failed;
    if (r.method == "quadrature") quad.push_back(r.chi);
  }
  if (out.format == "json") {
    json j{{"schema", "switchlab.chi-profile v1"},
           {"params", {{"a", s.a}, {"b", s.b}, {"u", s.u}, {"degenerate", s.degenerate}}},
           {"rows", json::array()}};
    for (const auto& r : rows) {
      j["rows"].push_back({{"beta", r.beta}, {"chi", detail::num(r.chi)}, {"method", r.method},
                           {"err", detail::num(r.err)}, {"status", r.status}});
    }
    detail::write_json(res, out, "chi_profile.json", j);
  } else {
    std::ostringstream o;
    io::CsvWriter w(o, "chi-profile", {"beta", "chi", "method", "err", "status"});
    for (const auto& r : rows) w.row({r.beta, r.chi, r.method, r.err, r.status});
    detail::write_file(res, out, "chi_profile.csv", o.str());
  }
  if (out.svg) {
    io::svg::Series q{"quadrature", {}, {}, {}, "#1f77b4"};
    io::svg::Series m{"monte carlo", {}, {}, {}, "#d62728", true, false};
    for (const auto& r : rows) {
      auto& sr = r.method == "quadrature" ? q : m;
      sr.x.push_back(r.beta);
      sr.y.push_back(r.chi);
      sr.err.push_back(r.method == "quadrature" ? 0.0 : r.err);
    }
    std::vector<io::svg::Series> series{q};
    if (!m.x.empty()) series.push_back(m);
    const auto meta = detail::metadata("chi-profile", {{"a", detail::fmt(s.a)}, {"b", detail::fmt(s.b)},
                                                       {"u", detail::fmt(s.u)}, {"seed", std::to_string(s.seed)}});
    detail::write_file(res, out, "chi_profile.svg",
                       io::svg::line_plot(series, {"Lyapunov exponent chi(beta)", "beta", "chi", true, true}, meta));
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : quad) {
    if (std::isfinite(v)) mx = std::max(mx, v);
  }
  res.summary = {{"zero_crossings", count_zero_crossings(quad)}, {"max_chi", detail::num(mx)}};
  return res;
}

// ---------------------------------------------------------------- sign-region

struct SignRegionSpec {
  double a = 0.10, b = 2.5;
  double beta_min = 0.1, beta_max = 100.0;
  int beta_points = 60;
  double u_min = 0.05, u_max = 0.95;
  int u_points = 60;
  double tolerance = 1e-4;
  unsigned workers = 1;
};

struct ContourPoint {
  double beta = 0.0, u = 0.0, chi = 0.0;
};

struct SignRegionResult {
  std::vector<double> betas, us;
  std::vector<double> chi;  // chi[j * betas.size() + i] at (betas[i], us[j])
  std::vector<std::string> status;
  std::vector<std::vector<ContourPoint>> contours;
  std::size_t positive_cells = 0;
  bool touches_boundary = false;
  int components = 0;
  std::size_t failed = 0;

  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return chi[j * betas.size() + i]; }
};

namespace detail {

// 4-connected components of the positive set.
inline int positive_components(const SignRegionResult& r) {
  const std::size_t nx = r.betas.size(), ny = r.us.size();
  std::vector<int> label(nx * ny, 0);
  int n = 0;
  for (std::size_t s = 0; s < nx * ny; ++s) {
    if (!(r.chi[s] > 0.0) || label[s]) continue;
    ++n;
    std::vector<std::size_t> stack{s};
    label[s] = n;
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const std::size_t i = c % nx, j = c / nx;
      const std::size_t nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
      for (const auto& q : nb) {
        if (q[0] >= nx || q[1] >= ny) continue;  // unsigned wrap covers -1
        const std::size_t k = q[1] * nx + q[0];
        if (r.chi[k] > 0.0 && !label[k]) {
          label[k] = n;
          stack.push_back(k);
        }
      }
    }
  }
  return n;
}

}  // namespace detail

/// chi on the (log beta) x u grid and the zero level set. Crossings on grid
/// edges are refined by bisection in (log beta, u) until |chi| <= tolerance,
/// then joined cell by cell (marching squares) into polylines.
[[nodiscard]] inline SignRegionResult sign_region(const SignRegionSpec& s) {
  SignRegionResult r;
  r.betas = log_grid(s.beta_min, s.beta_max, s.beta_points);
  r.us = linear_grid(s.u_min, s.u_max, s.u_points);
  const std::size_t nx = r.betas.size(), ny = r.us.size();
  auto chi_at = [&](double beta, double u) { return lyapunov_chi(make_params(s.a, s.b, beta, u)).value; };
  const auto vals = parallel_map(nx * ny, s.workers, [&](std::size_t k) -> std::pair<double, std::string> {
    try {
      return {chi_at(r.betas[k % nx], r.us[k / nx]), "ok"};
    } catch (const std::exception& e) {
      return {std::numeric_limits<double>::quiet_NaN(), std::string("failed: ") + e.what()};
    }
  });
  for (const auto& [v, st] : vals) {
    r.chi.push_back(v);
    r.status.push_back(st);
    if (st != "ok") ++r.failed;
    if (v > 0.0) ++r.positive_cells;
  }
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      if ((i == 0 || j == 0 || i + 1 == nx || j + 1 == ny) && r.at(i, j) > 0.0) r.touches_boundary = true;
    }
  }
  r.components = detail::positive_components(r);

  // edge ids: horizontal (i,j)-(i+1,j) -> 2*(j*nx+i); vertical (i,j)-(i,j+1) -> 2*(j*nx+i)+1
  std::map<std::size_t, ContourPoint> crossing;
  auto refine = [&](std::size_t id) -> const ContourPoint& {
    auto it = crossing.find(id);
    if (it != crossing.end()) return it->second;
    const std::size_t base = id / 2, i = base % nx, j = base / nx;
    const bool horiz = id % 2 == 0;
    double lo_lb = std::log(r.betas[i]), lo_u = r.us[j];
    double hi_lb = horiz ? std::log(r.betas[i + 1]) : lo_lb, hi_u = horiz ? lo_u : r.us[j + 1];
    double flo = r.at(i, j);
    double fhi = horiz ? r.at(i + 1, j) : r.at(i, j + 1);
    ContourPoint cp;
    // bisection on the parameter along the edge; keep the endpoint values bracketing zero
    for (int it2 = 0; it2 < 60; ++it2) {
      // secant guess clipped to the middle half for robustness
      double w = flo / (flo - fhi);
      w = std::clamp(w, 0.25, 0.75);
      const double mlb = lo_lb + w * (hi_lb - lo_lb), mu = lo_u + w * (hi_u - lo_u);
      double fm;
      try {
        fm = chi_at(std::exp(mlb), mu);
      } catch (const std::exception&) {
        fm = std::numeric_limits<double>::quiet_NaN();
      }
      cp = {std::exp(mlb), mu, fm};
      if (!std::isfinite(fm) || std::abs(fm) <= s.tolerance) break;
      if ((fm > 0.0) == (flo > 0.0)) {
        lo_lb = mlb, lo_u = mu, flo = fm;
      } else {
        hi_lb = mlb, hi_u = mu, fhi = fm;
      }
    }
    return crossing.emplace(id, cp).first->second;
  };

  // marching squares: segments between crossing edges of each cell
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const double c[4] = {r.at(i, j), r.at(i + 1, j), r.at(i + 1, j + 1), r.at(i, j + 1)};
      if (!(std::isfinite(c[0]) && std::isfinite(c[1]) && std::isfinite(c[2]) && std::isfinite(c[3]))) continue;
      const std::size_t e[4] = {2 * (j * nx + i), 2 * (j * nx + i + 1) + 1, 2 * ((j + 1) * nx + i),
                                2 * (j * nx + i) + 1};  // bottom, right, top, left
      std::vector<std::size_t> hits;
      for (int k = 0; k < 4; ++k) {
        if ((c[k] > 0.0) != (c[(k + 1) % 4] > 0.0)) hits.push_back(e[k]);
      }
      if (hits.size() == 2) {
        segments.emplace_back(hits[0], hits[1]);
      } else if (hits.size() == 4) {
        // saddle: the centre sign decides which corners connect
        const bool centre_pos = (c[0] + c[1] + c[2] + c[3]) > 0.0;
        if (centre_pos == (c[0] > 0.0)) {
          segments.emplace_back(hits[0], hits[1]);
          segments.emplace_back(hits[2], hits[3]);
        } else {
          segments.emplace_back(hits[3], hits[0]);
          segments.emplace_back(hits[1], hits[2]);
        }
      }
    }
  }
  // chain segments through shared edges
  std::map<std::size_t, std::vector<std::size_t>> by_edge;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    by_edge[segments[k].first].push_back(k);
    by_edge[segments[k].second].push_back(k);
  }
  std::vector<bool> used(segments.size(), false);
  auto next_seg = [&](std::size_t edge) -> std::optional<std::size_t> {
    for (std::size_t k : by_edge[edge]) {
      if (!used[k]) return k;
    }
    return std::nullopt;
  };
  for (std::size_t start = 0; start < segments.size(); ++start) {
    if (used[start]) continue;
    // walk backwards to an open end (or around a loop) first
    std::size_t head_edge = segments[start].first;
    std::vector<std::size_t> chain_edges;
    used[start] = true;
    std::vector<std::size_t> fwd{segments[start].first, segments[start].second};
    for (std::size_t e = fwd.back(); auto k = next_seg(e);) {
      used[*k] = true;
      e = segments[*k].first == e ? segments[*k].second : segments[*k].first;
      fwd.push_back(e);
    }
    std::vector<std::size_t> back;
    for (std::size_t e = head_edge; auto k = next_seg(e);) {
      used[*k] = true;
      e = segments[*k].first == e ? segments[*k].second : segments[*k].first;
      back.push_back(e);
    }
    chain_edges.assign(back.rbegin(), back.rend());
    chain_edges.insert(chain_edges.end(), fwd.begin(), fwd.end());
    std::vector<ContourPoint> line;
    for (std::size_t e : chain_edges) line.push_back(refine(e));
    r.contours.push_back(std::move(line));
  }
  return r;
}

inline CommandResult cmd_sign_region(const SignRegionSpec& s, const OutputOptions& out) {
  const SignRegionResult r = sign_region(s);
  CommandResult res;
  res.points = r.chi.size();
  res.failed = r.failed;
  double worst_contour = 0.0;
  std::size_t contour_points = 0;
  for (const auto& l : r.contours) {
    for (const auto& p : l) {
      worst_contour = std::max(worst_contour, std::abs(p.chi));
      ++contour_points;
    }
  }
  if (out.format == "json") {
    json j{{"schema", "switchlab.sign-region v1"},
           {"params", {{"a", s.a}, {"b", s.b}}},
           {"grid", json::array()},
           {"contours", json::array()}};
    for (std::size_t k = 0; k < r.chi.size(); ++k) {
      j["grid"].push_back({{"beta", r.betas[k % r.betas.size()]}, {"u", r.us[k / r.betas.size()]},
                           {"chi", detail::num(r.chi[k])}, {"status", r.status[k]}});
    }
    for (const auto& l : r.contours) {
      json pl = json::array();
      for (const auto& p : l) pl.push_back({{"beta", p.beta}, {"u", p.u}, {"chi", detail::num(p.chi)}});
      j["contours"].push_back(pl);
    }
    detail::write_json(res, out, "sign_region.json", j);
  } else {
    std::ostringstream g;
    io::CsvWriter w(g, "sign-region-grid", {"beta", "u", "chi", "status"});
    for (std::size_t k = 0; k < r.chi.size(); ++k) {
      w.row({r.betas[k % r.betas.size()], r.us[k / r.betas.size()], r.chi[k], r.status[k]});
    }
    detail::write_file(res, out, "sign_region.csv", g.str());
    std::ostringstream c;
    io::CsvWriter wc(c, "sign-region-contour", {"polyline", "beta", "u", "chi"});
    for (std::size_t l = 0; l < r.contours.size(); ++l) {
      for (const auto& p : r.contours[l]) wc.row({static_cast<long long>(l), p.beta, p.u, p.chi});
    }
    detail::write_file(res, out, "sign_region_contour.csv", c.str());
  }
  if (out.svg) {
    const auto meta = detail::metadata("sign-region", {{"a", detail::fmt(s.a)}, {"b", detail::fmt(s.b)}});
    std::vector<io::svg::Polyline> lines, mirrored;
    for (const auto& l : r.contours) {
      io::svg::Polyline pl, pm;
      for (const auto& p : l) {
        pl.emplace_back(p.beta, p.u);
        pm.emplace_back(p.beta, 1.0 - p.u);
      }
      lines.push_back(pl);
      mirrored.push_back(pm);
    }
    detail::write_file(res, out, "sign_region.svg",
                       io::svg::heatmap(r.betas, r.us, r.chi, lines, {"Sign of chi(beta, u)", "beta", "u", true}, meta));
    // u -> 1 - u view for comparing the two orientations
    std::vector<double> us_m(r.us.rbegin(), r.us.rend()), chi_m(r.chi.size());
    for (auto& v : us_m) v = 1.0 - v;
    const std::size_t nx = r.betas.size(), ny = r.us.size();
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) chi_m[j * nx + i] = r.chi[(ny - 1 - j) * nx + i];
    }
    detail::write_file(res, out, "sign_region_mirror.svg",
                       io::svg::heatmap(r.betas, us_m, chi_m, mirrored,
                                        {"Sign of chi(beta, 1 - u)", "beta", "1 - u", true}, meta));
  }
  res.summary = {{"positive_cells", r.positive_cells},
                 {"touches_boundary", r.touches_boundary},
                 {"components", r.components},
                 {"contour_points", contour_points},
                 {"max_abs_chi_on_contour", worst_contour}};
  return res;
}

// ---------------------------------------------------------------- chi-det

struct ChiDetSpec {
  double a = 0.1, b = 2.0, u = 0.5;
  double beta_min = 0.1, beta_max = 10.0;
  int points = 400;
  std::optional<double> eigenline_beta = 1.0;  // exceptional x0 overlay
  std::int64_t periods = 100000000;
};

struct ChiDetRow {
  double beta = 0.0, tau0 = 0.0, tau1 = 0.0, chi_d = 0.0;
  std::string regime;
  std::string status = "ok";
};

[[nodiscard]] inline std::vector<ChiDetRow> chi_det_rows(const ChiDetSpec& s) {
  std::vector<ChiDetRow> rows;
  for (double beta : log_grid(s.beta_min, s.beta_max, s.points)) {
    ChiDetRow r;
    r.beta = beta;
    try {
      const auto rep = periodic_chi(make_params(s.a, s.b, beta, s.u));
      r.tau0 = rep.control.tau0;
      r.tau1 = rep.control.tau1;
      r.chi_d = rep.chi_d;
      r.regime = std::string(to_string(rep.regime));
    } catch (const std::exception& e) {
      r.chi_d = std::numeric_limits<double>::quiet_NaN();
      r.status = std::string("failed: ") + e.what();
    }
    rows.push_back(r);
  }
  return rows;
}

struct EigenlinePoint {
  double beta = 0.0;
  double chi_generic = 0.0;    // from a generic x0
  double chi_eigenline = 0.0;  // x0 on the lambda2 eigenline
  std::string regime;
};

[[nodiscard]] inline EigenlinePoint eigenline_point(const SystemParams& p, std::int64_t periods) {
  const auto rep = periodic_chi(p);
  EigenlinePoint e;
  e.beta = p.beta;
  e.regime = std::string(to_string(rep.regime));
  e.chi_generic = chi_d_from_x0(p, {1.0, 0.3}, periods);
  const auto& P = rep.product;
  const double l2 = rep.eigenvalues[1].real();
  Vec2 v{P.m01, l2 - P.m00};
  if (norm(v) < 1e-300) v = {l2 - P.m11, P.m10};
  e.chi_eigenline = chi_d_from_x0(p, v, periods);
  return e;
}

inline CommandResult cmd_chi_det(const ChiDetSpec& s, const OutputOptions& out) {
  const auto rows = chi_det_rows(s);
  std::optional<EigenlinePoint> red;
  if (s.eigenline_beta) red = eigenline_point(make_params(s.a, s.b, *s.eigenline_beta, s.u), s.periods);
  CommandResult res;
  res.points = rows.size();
  std::vector<bool> pos;
  for (const auto& r : rows) {
    if (r.status != "ok") ++res.failed;
    pos.push_back(r.chi_d > 0.0);
  }
  if (out.format == "json") {
    json j{{"schema", "switchlab.chi-det v1"}, {"params", {{"a", s.a}, {"b", s.b}, {"u", s.u}}}, {"rows", json::array()}};
    for (const auto& r : rows) {
      j["rows"].push_back({{"beta", r.beta}, {"tau0", r.tau0}, {"tau1", r.tau1}, {"chi_d", detail::num(r.chi_d)},
                           {"regime", r.regime}, {"status", r.status}});
    }
    if (red) {
      j["eigenline"] = {{"beta", red->beta}, {"chi_generic", red->chi_generic},
                        {"chi_eigenline", red->chi_eigenline}, {"regime", red->regime}};
    }
    detail::write_json(res, out, "chi_det.json", j);
  } else {
    std::ostringstream o;
    io::CsvWriter w(o, "chi-det", {"beta", "tau0", "tau1", "chi_d", "regime", "status"});
    for (const auto& r : rows) w.row({r.beta, r.tau0, r.tau1, r.chi_d, r.regime, r.status});
    detail::write_file(res, out, "chi_det.csv", o.str());
    if (red) {
      std::ostringstream e;
      io::CsvWriter we(e, "chi-det-eigenline", {"beta", "chi_generic", "chi_eigenline", "regime"});
      we.row({red->beta, red->chi_generic, red->chi_eigenline, red->regime});
      detail::write_file(res, out, "chi_det_eigenline.csv", e.str());
    }
  }
  if (out.svg) {
    io::svg::Series c{"chi^d", {}, {}, {}, "#1f77b4"};
    for (const auto& r : rows) {
      c.x.push_back(r.beta);
      c.y.push_back(r.chi_d);
    }
    std::vector<io::svg::Series> series{c};
    if (red) series.push_back({"eigenline x0", {red->beta}, {red->chi_eigenline}, {}, "#d62728", true, false});
    const auto meta = detail::metadata("chi-det", {{"a", detail::fmt(s.a)}, {"b", detail::fmt(s.b)},
                                                   {"u", detail::fmt(s.u)}});
    detail::write_file(res, out, "chi_det.svg",
                       io::svg::line_plot(series, {"Periodic switching exponent", "beta", "chi^d", true, true}, meta));
  }
  res.summary = {{"positive_intervals", count_runs(pos)}};
  if (red) res.summary["eigenline"] = {{"chi_generic", red->chi_generic}, {"chi_eigenline", red->chi_eigenline}};
  return res;
}

// ---------------------------------------------------------------- chi-erlang

struct ChiErlangSpec {
  double a = 0.15, b = 3.0;
  std::vector<int> stages{50};
  double beta_min = 0.2, beta_max = 5.0;
  int points = 60;
  double T = 5000.0;
  int replicas = 32;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct ErlangRow {
  int n = 1;
  double beta = 0.0, chi = 0.0, std_error = 0.0, chi_d = 0.0;
  std::string status = "ok";
};

[[nodiscard]] inline std::vector<ErlangRow> chi_erlang_rows(const ChiErlangSpec& s) {
  const auto betas = log_grid(s.beta_min, s.beta_max, s.points);
  const std::size_t nb = betas.size();
  return parallel_map(s.stages.size() * nb, s.workers, [&](std::size_t k) {
    ErlangRow r;
    r.n = s.stages[k / nb];
    r.beta = betas[k % nb];
    try {
      const auto p = make_params(s.a, s.b, r.beta, 0.5);
      // one stream per (n, beta) so adding stage counts leaves other rows unchanged
      const auto c = estimate_chi_erlang(p, r.n, s.T, s.replicas,
                                         stream_seed(s.seed, static_cast<std::uint64_t>(r.n), k % nb));
      r.chi = c.value;
      r.std_error = c.error;
      r.chi_d = periodic_chi(p).chi_d;
    } catch (const std::exception& e) {
      r.chi = std::numeric_limits<double>::quiet_NaN();
      r.status = std::string("failed: ") + e.what();
    }
    return r;
  });
}

/// Disjoint beta-intervals with chi_n - 3 stderr > 0, per stage count.
[[nodiscard]] inline std::map<int, int> erlang_positive_intervals(const std::vector<ErlangRow>& rows) {
  std::map<int, std::vector<bool>> flags;
  for (const auto& r : rows) flags[r.n].push_back(r.chi - 3.0 * r.std_error > 0.0);
  std::map<int, int> out;
  for (const auto& [n, f] : flags) out[n] = count_runs(f);
  return out;
}

/// max over the grid of |chi_n - chi^d|, per stage count.
[[nodiscard]] inline std::map<int, double> erlang_max_gap(const std::vector<ErlangRow>& rows) {
  std::map<int, double> out;
  for (const auto& r : rows) out[r.n] = std::max(out[r.n], std::abs(r.chi - r.chi_d));
  return out;
}

inline CommandResult cmd_chi_erlang(const ChiErlangSpec& s, const OutputOptions& out) {
  const auto rows = chi_erlang_rows(s);
  CommandResult res;
  res.points = rows.size();
  for (const auto& r : rows) {
    if (r.status != "ok") ++res.failed;
  }
  if (out.format == "json") {
    json j{{"schema", "switchlab.chi-erlang v1"},
           {"params", {{"a", s.a}, {"b", s.b}, {"u", 0.5}, {"T", s.T}, {"replicas", s.replicas}, {"seed", s.seed}}},
           {"rows", json::array()}};
    for (const auto& r : rows) {
      j["rows"].push_back({{"n", r.n}, {"beta", r.beta}, {"chi", detail::num(r.chi)},
                           {"stderr", detail::num(r.std_error)}, {"chi_d", detail::num(r.chi_d)},
                           {"status", r.status}});
    }
    detail::write_json(res, out, "chi_erlang.json", j);
  } else {
    std::ostringstream o;
    io::CsvWriter w(o, "chi-erlang", {"n", "beta", "chi", "stderr", "chi_d", "status"});
    for (const auto& r : rows) w.row({static_cast<long long>(r.n), r.beta, r.chi, r.std_error, r.chi_d, r.status});
    detail::write_file(res, out, "chi_erlang.csv", o.str());
  }
  if (out.svg) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::vector<io::svg::Series> series;
    io::svg::Series det{"chi^d", {}, {}, {}, "#444444"};
    for (std::size_t k = 0; k < s.stages.size(); ++k) {
      io::svg::Series sr{"n = " + std::to_string(s.stages[k]), {}, {}, {}, colors[k % 5], true, true};
      for (const auto& r : rows) {
        if (r.n != s.stages[k]) continue;
        sr.x.push_back(r.beta);
        sr.y.push_back(r.chi);
        sr.err.push_back(3.0 * r.std_error);
        if (k == 0) {
          det.x.push_back(r.beta);
          det.y.push_back(r.chi_d);
        }
      }
      series.push_back(sr);
    }
    series.push_back(det);
    const auto meta = detail::metadata("chi-erlang", {{"a", detail::fmt(s.a)}, {"b", detail::fmt(s.b)},
                                                      {"T", detail::fmt(s.T)}, {"seed", std::to_string(s.seed)}});
    detail::write_file(res, out, "chi_erlang.svg",
                       io::svg::line_plot(series, {"Erlang-staged switching exponent", "beta", "chi_n", true, true},
                                          meta));
  }
  json ints = json::object(), gaps = json::object();
  for (const auto& [n, c] : erlang_positive_intervals(rows)) ints[std::to_string(n)] = c;
  for (const auto& [n, g] : erlang_max_gap(rows)) gaps[std::to_string(n)] = g;
  res.summary = {{"positive_intervals", ints}, {"max_gap_to_chi_d", gaps}};
  return res;
}

// ---------------------------------------------------------------- tail

struct TailSpec {
  std::string kind = "planar";  // planar | example68 | matrices
  SystemParams params{0.15, 3.0, 0.3, 0.5, false};
  DecenteredSystem system;
  int k_phases = 1;
  double grid_min = 0.05, grid_max = 4.0;
  int grid_points = 60;
  int x_grid = 181;
  std::int64_t b_samples = 200000;
  std::int64_t chain_steps = 2000000;
  double burn_fraction = 0.1;
  std::size_t hill_k = 0;        // 0: ceil(sqrt(n))
  std::size_t block_length = 0;  // 0: ceil(n^(1/3))
  int bootstrap = 100;
  std::int64_t probe_steps = 1000000;
  int checkpoints = 12;
  double epsilon = 1e-6;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  bool export_chain = false;
};

/// Reads [system], [search] and [tail] sections.
[[nodiscard]] inline TailSpec tail_spec_from_config(const io::Config& c) {
  TailSpec s;
  s.kind = c.get<std::string>("system.kind", "planar");
  auto vec = [&](const std::string& key, Eigen::Index d) {
    const auto v = c.vector(key);
    if (static_cast<Eigen::Index>(v.size()) != d) {
      throw io::ConfigError(c.origin() + ": field '" + key + "' needs " + std::to_string(d) + " entries");
    }
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), d));
  };
  try {
    if (s.kind == "planar") {
      s.params = make_params(c.require<double>("system.a"), c.require<double>("system.b"),
                             c.require<double>("system.beta"), c.get<double>("system.u", 0.5));
      s.system = planar_decentered(s.params, vec("system.b0", 2), vec("system.b1", 2));
    } else if (s.kind == "example68") {
      s.system = example68_system(c.require<double>("system.a"), c.require<double>("system.b"), vec("system.b0", 3),
                                  vec("system.b1", 3), c.get<double>("system.lambda0", 1.0),
                                  c.get<double>("system.lambda1", 1.0));
    } else if (s.kind == "matrices") {
      const Eigen::MatrixXd A0 = c.matrix("system.A0");
      const Eigen::MatrixXd A1 = c.matrix("system.A1");
      s.system = DecenteredSystem(A0, A1, vec("system.b0", A0.rows()), vec("system.b1", A0.rows()),
                                  c.require<double>("system.lambda0"), c.require<double>("system.lambda1"));
    } else {
      throw io::ConfigError(c.origin() + ": field 'system.kind': unknown kind '" + s.kind +
                            "' (planar, example68 or matrices)");
    }
  } catch (const io::ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw io::ConfigError(c.origin() + ": [system]: " + e.what());
  }
  s.k_phases = c.get<int>("search.k", s.k_phases);
  s.grid_min = c.get<double>("search.grid_min", s.grid_min);
  s.grid_max = c.get<double>("search.grid_max", s.grid_max);
  s.grid_points = c.get<int>("search.grid_points", s.grid_points);
  s.x_grid = c.get<int>("search.x_grid", s.x_grid);
  s.b_samples = c.get<std::int64_t>("tail.b_samples", s.b_samples);
  s.chain_steps = c.get<std::int64_t>("tail.chain_steps", s.chain_steps);
  s.burn_fraction = c.get<double>("tail.burn_fraction", s.burn_fraction);
  s.hill_k = c.get<std::size_t>("tail.hill_k", s.hill_k);
  s.block_length = c.get<std::size_t>("tail.block_length", s.block_length);
  s.bootstrap = c.get<int>("tail.bootstrap", s.bootstrap);
  s.probe_steps = c.get<std::int64_t>("tail.probe_steps", s.probe_steps);
  s.checkpoints = c.get<int>("tail.checkpoints", s.checkpoints);
  s.epsilon = c.get<double>("tail.epsilon", s.epsilon);
  s.export_chain = c.get<bool>("tail.export_chain", s.export_chain);
  s.seed = c.get<std::uint64_t>("run.seed", s.seed);
  return s;
}

namespace detail {

inline json tail_json(const TailEstimate& e) {
  return {{"method", to_string(e.method)}, {"found", e.found},       {"x1", num(e.x1)},
          {"ci_low", num(e.ci_low)},       {"ci_high", num(e.ci_high)}, {"sample_size", e.sample_size},
          {"blocks", e.blocks},            {"light_tail_flag", e.light_tail_flag}, {"message", e.message}};
}

inline json matrix_json(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    j.push_back(r);
  }
  return j;
}

}  // namespace detail

struct TailOutcome {
  std::string verdict;
  std::optional<TailEstimate> hill, increment;
  std::vector<TailEstimate> roots;
  std::optional<BoundedSupportReport> probe;
  ExplosiveControl search;
  json report;
};

[[nodiscard]] inline TailOutcome run_tail(const TailSpec& s, CommandResult* res = nullptr,
                                          const OutputOptions* out = nullptr) {
  const DecenteredSystem& sys = s.system;
  TailOutcome o;
  json& j = o.report;
  j["schema"] = "switchlab.tail v1";
  j["system"] = {{"kind", s.kind},
                 {"dim", sys.dim()},
                 {"A0", detail::matrix_json(sys.A(kMode0))},
                 {"A1", detail::matrix_json(sys.A(kMode1))},
                 {"b0", std::vector<double>(sys.b(kMode0).data(), sys.b(kMode0).data() + sys.dim())},
                 {"b1", std::vector<double>(sys.b(kMode1).data(), sys.b(kMode1).data() + sys.dim())},
                 {"lambda0", sys.rate(kMode0)},
                 {"lambda1", sys.rate(kMode1)},
                 {"spectral_abscissa", {spectral_abscissa(sys.A(kMode0)), spectral_abscissa(sys.A(kMode1))}},
                 {"hurwitz", true}};  // the constructor rejects anything else
  j["seed"] = s.seed;
  const HurwitzEnvelope env = hurwitz_envelope(sys);
  j["envelope"] = {{"C", env.C}, {"eta", env.eta}, {"worst_sampled_ratio", envelope_worst_ratio(sys, env)}};
  if (s.kind == "planar") {
    try {
      j["chi_quadrature"] = lyapunov_chi(s.params).value;
    } catch (const std::exception& e) {
      j["chi_quadrature"] = nullptr;
      j["chi_quadrature_error"] = e.what();
    }
  }
  ExplosiveSearchOptions so;
  so.x_grid = s.x_grid;
  so.seed = s.seed;
  so.workers = s.workers;
  o.search = explosive_control_search(sys.A(kMode0), sys.A(kMode1), s.k_phases,
                                      linear_grid(s.grid_min, s.grid_max, s.grid_points), so);
  j["search"] = {{"k", s.k_phases},
                 {"grid", {s.grid_min, s.grid_max, s.grid_points}},
                 {"durations", o.search.durations},
                 {"start_mode", o.search.start_mode},
                 {"sigma_min", o.search.sigma_min},
                 {"sigma_certified", o.search.sigma_certified},
                 {"minimax_gain", o.search.minimax_gain},
                 {"minimax_certified", o.search.minimax_certified},
                 {"worst_direction", o.search.worst_direction}};

  if (o.search.minimax_certified) {
    MomentRootOptions mo;
    mo.bootstrap = s.bootstrap;
    mo.seed = s.seed;
    std::map<int, std::vector<double>> blocks;
    for (int m : {1, 2, 4}) {
      SampleBOptions bo;
      bo.blocks = m;
      bo.workers = s.workers;
      blocks[m] = sample_B(sys, s.k_phases, s.b_samples, stream_seed(s.seed, 100 + m), bo);
      o.roots.push_back(moment_root_x1(blocks[m], mo, m));
    }
    o.increment = moment_increment_root(blocks[2], blocks[4], mo, 2);
    const Eigen::MatrixXd chain = yn_chain(sys, sys.b(kMode0), s.chain_steps, stream_seed(s.seed, 200));
    const auto norms = stationary_norms(chain, s.burn_fraction);
    const std::size_t n = norms.size();
    HillOptions ho;
    ho.bootstrap = 2 * s.bootstrap;
    ho.seed = s.seed;
    ho.block_length = s.block_length ? s.block_length : static_cast<std::size_t>(std::ceil(std::cbrt(double(n))));
    const std::size_t k = s.hill_k ? s.hill_k : static_cast<std::size_t>(std::ceil(std::sqrt(double(n))));
    o.hill = hill_tail_index(norms, k, ho);
    json roots = json::array();
    for (const auto& r : o.roots) roots.push_back(detail::tail_json(r));
    const bool both = o.hill->found && o.increment->found;
    const double ratio = both ? std::max(o.hill->x1, o.increment->x1) / std::min(o.hill->x1, o.increment->x1)
                              : std::numeric_limits<double>::quiet_NaN();
    const bool overlap = both && o.hill->ci_low <= o.increment->ci_high && o.increment->ci_low <= o.hill->ci_high;
    j["heavy"] = {{"moment_roots", roots},
                  {"increment_root", detail::tail_json(*o.increment)},
                  {"hill", detail::tail_json(*o.hill)},
                  {"hill_k", k},
                  {"chain_samples", n},
                  {"ratio", detail::num(ratio)},
                  {"ci_overlap", overlap}};
    o.verdict = (both && !o.hill->light_tail_flag) ? "heavy-tail" : "inconclusive";
    if (res && out) {
      std::ostringstream bs;
      io::write_samples_csv(bs, "b-norm-samples", "norm_B", blocks[1]);
      detail::write_file(*res, *out, "tail_b_samples.csv", bs.str());
      std::vector<std::size_t> ks;
      for (std::size_t kk = 10; kk <= n / 10; kk = kk * 5 / 4 + 1) ks.push_back(kk);
      std::ostringstream hs;
      io::CsvWriter w(hs, "hill-stability", {"k", "x1"});
      for (const auto& [kk, x] : hill_stability(norms, ks)) w.row({static_cast<long long>(kk), x});
      detail::write_file(*res, *out, "tail_hill_stability.csv", hs.str());
      if (s.export_chain) {
        std::ostringstream cs;
        io::write_samples_csv(cs, "chain-norms", "norm_Y", norms);
        detail::write_file(*res, *out, "tail_chain_norms.csv", cs.str());
      }
    }
  } else {
    BoundedSupportOptions bo;
    bo.epsilon = s.epsilon;
    o.probe = bounded_support_probe(sys, s.probe_steps, s.checkpoints, stream_seed(s.seed, 300), bo);
    json cps = json::array();
    for (const auto& c : o.probe->checkpoints) cps.push_back({{"step", c.step}, {"running_max", c.running_max}});
    j["bounded"] = {{"checkpoints", cps},
                    {"increase_second_half", o.probe->increase_second_half},
                    {"epsilon", s.epsilon},
                    {"apriori_radius_heuristic", detail::num(o.probe->apriori_radius)}};
    o.verdict = o.probe->bounded ? "bounded" : "inconclusive";
  }
  j["verdict"] = o.verdict;
  return o;
}

inline CommandResult cmd_tail(const TailSpec& s, const OutputOptions& out) {
  CommandResult res;
  TailOutcome o = run_tail(s, &res, &out);
  res.points = 1;
  detail::write_json(res, out, "tail_report.json", o.report);
  if (out.svg && o.probe) {
    io::svg::Series sr{"running max |Y_n|", {}, {}, {}, "#1f77b4", true, true};
    for (const auto& c : o.probe->checkpoints) {
      sr.x.push_back(static_cast<double>(c.step));
      sr.y.push_back(c.running_max);
    }
    detail::write_file(res, out, "tail_probe.svg",
                       io::svg::line_plot({sr}, {"Bounded-support probe", "step", "running max", true},
                                          detail::metadata("tail", {{"seed", std::to_string(s.seed)}})));
  }
  res.summary = {{"verdict", o.verdict}};
  return res;
}

// ---------------------------------------------------------------- simulate

struct SimulateSpec {
  double a = 0.15, b = 3.0, beta = 2.0, u = 0.5;
  bool degenerate = false;
  std::string law = "exponential";  // exponential | erlang | periodic
  int stages = 10;
  Vec2 x0{1.0, 0.0};
  int i0 = 0;
  double T = 20.0;
  double dt = 0.01;
  std::uint64_t seed = 1;
};

[[nodiscard]] inline SwitchingLaw make_law(const std::string& name, int stages) {
  if (name == "exponential") return SwitchingLaw::exponential();
  if (name == "erlang") return SwitchingLaw::erlang(stages);
  if (name == "periodic") return SwitchingLaw::periodic();
  throw InvalidArgument("unknown switching law '" + name + "' (exponential, erlang or periodic)");
}

inline CommandResult cmd_simulate(const SimulateSpec& s, const OutputOptions& out) {
  const auto p = make_params(s.a, s.b, s.beta, s.u, s.degenerate);
  const auto rec = simulate(p, make_law(s.law, s.stages), s.x0, Mode(s.i0), s.T, s.seed, {s.dt});
  CommandResult res;
  res.points = rec.samples.size();
  if (out.format == "json") {
    json j{{"schema", "switchlab.trajectory v1"},
           {"params", {{"a", s.a}, {"b", s.b}, {"beta", s.beta}, {"u", s.u}}},
           {"law", rec.law},
           {"seed", rec.seed},
           {"horizon", rec.horizon},
           {"events", json::array()},
           {"samples", json::array()}};
    for (const auto& e : rec.events) j["events"].push_back({{"t", e.t}, {"mode", e.mode}});
    for (const auto& smp : rec.samples) {
      j["samples"].push_back({{"t", smp.t}, {"x", smp.x}, {"mode", smp.mode}, {"log_radius", smp.log_radius},
                              {"theta_lift", smp.theta}});
    }
    detail::write_json(res, out, "trajectory.json", j);
  } else {
    std::ostringstream o;
    io::write_trajectory_csv(o, rec);
    detail::write_file(res, out, "trajectory.csv", o.str());
  }
  if (out.svg) {
    std::vector<double> x1, x2;
    std::vector<int> mode;
    io::svg::Series lr{"log radius", {}, {}, {}, "#1f77b4"};
    for (const auto& smp : rec.samples) {
      x1.push_back(smp.x[0]);
      x2.push_back(smp.x[1]);
      mode.push_back(smp.mode);
      lr.x.push_back(smp.t);
      lr.y.push_back(smp.log_radius);
    }
    const auto meta = detail::metadata("simulate", {{"a", detail::fmt(s.a)}, {"b", detail::fmt(s.b)},
                                                    {"beta", detail::fmt(s.beta)}, {"u", detail::fmt(s.u)},
                                                    {"law", rec.law}, {"seed", std::to_string(s.seed)}});
    detail::write_file(res, out, "trajectory.svg",
                       io::svg::phase_portrait(x1, x2, mode, {"Trajectory", "x1", "x2"}, meta));
    detail::write_file(res, out, "log_radius.svg",
                       io::svg::line_plot({lr}, {"log |X_t|", "t", "log radius"}, meta));
  }
  const double slope = (rec.samples.back().log_radius - rec.samples.front().log_radius) / s.T;
  res.summary = {{"events", rec.events.size()}, {"log_radius_slope", slope}};
  return res;
}

}  // namespace switchlab::sweep
