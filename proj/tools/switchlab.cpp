// switchlab command-line front end.
//
// Precedence for every setting: built-in default < --config file < flag.
// Exit codes: 0 ok, 1 usage/config error, 2 numerical failure, 3 some sweep points failed.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "switchlab/sweep.hpp"

namespace sl = switchlab;
namespace sw = switchlab::sweep;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitPartial = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::optional<std::string> format;
  bool svg = false;
};

// Settings are read from the section named after the subcommand, then [run].
struct Layer {
  std::unique_ptr<sl::io::Config> cfg;
  std::string section;

  template <class T>
  void apply(T& dst, const std::string& key, const std::optional<T>& flag) const {
    if (cfg) dst = cfg->get<T>(section + "." + key, dst);
    if (flag) dst = *flag;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "INI config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "master seed (u64)");
  app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "output directory");
  app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_flag("--svg", c.svg, "also write SVG figures");
}

Layer load(const Common& c, const std::string& section) {
  Layer l;
  l.section = section;
  if (!c.config.empty()) l.cfg = std::make_unique<sl::io::Config>(sl::io::Config::from_file(c.config));
  return l;
}

struct Resolved {
  sw::OutputOptions out;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

Resolved resolve(const Common& c, const Layer& l) {
  Resolved r;
  std::string dir = ".";
  if (l.cfg) {
    r.seed = l.cfg->get<std::uint64_t>("run.seed", r.seed);
    r.workers = l.cfg->get<unsigned>("run.workers", r.workers);
    dir = l.cfg->get<std::string>("run.out", dir);
    r.out.format = l.cfg->get<std::string>("run.format", r.out.format);
    r.out.svg = l.cfg->get<bool>("run.svg", r.out.svg);
  }
  if (c.seed) r.seed = *c.seed;
  if (c.workers) r.workers = *c.workers;
  if (c.out) dir = *c.out;
  if (c.format) r.out.format = *c.format;
  if (c.svg) r.out.svg = true;
  if (r.out.format != "csv" && r.out.format != "json") {
    throw sl::io::ConfigError("run.format must be csv or json, got '" + r.out.format + "'");
  }
  if (r.workers == 0) throw sl::io::ConfigError("run.workers must be >= 1");
  r.out.dir = dir;
  return r;
}

int report(const std::string& name, const sw::CommandResult& res) {
  for (const auto& f : res.files) std::cout << "wrote " << f.string() << "\n";
  std::cout << name << ": " << res.points << " points, " << res.failed << " failed; " << res.summary.dump() << "\n";
  return res.failed > 0 ? kExitPartial : kExitOk;
}

template <class T>
using Opt = std::optional<T>;

// --------------------------------------------------------------- selftest

int selftest() {
  int failures = 0;
  auto line = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "  " << detail << "\n";
    if (!ok) ++failures;
  };
  char buf[160];
  {
    const double c = sl::lyapunov_chi(sl::make_params(0.15, 3.0, 1e-3, 0.5)).value;
    std::snprintf(buf, sizeof buf, "chi(beta=1e-3) = %.6f", c);
    line("slow-switching-limit", std::abs(c + 0.15) < 0.01, buf);
  }
  {
    const double c = sl::lyapunov_chi(sl::make_params(0.15, 1.0, 2.0, 0.5, true)).value;
    std::snprintf(buf, sizeof buf, "chi(b=1) = %.12f", c);
    line("degenerate-spiral", std::abs(c + 0.15) < 1e-9, buf);
  }
  {
    const auto r = sl::periodic_chi(sl::make_params(0.1, 2.0, 4.0 / std::numbers::pi, 0.5));
    const double want = -0.1 + std::log(4.0) / std::numbers::pi;
    std::snprintf(buf, sizeof buf, "chi_d(4/pi) = %.12f, closed form %.12f", r.chi_d, want);
    line("periodic-peak", std::abs(r.chi_d - want) < 1e-10, buf);
  }
  {
    const double g = sl::jump_count_mgf(1.3, 2.0, 0.7, 0.7, sl::kMode0);
    const double want = std::exp(0.7 * 2.0 * 0.3);
    std::snprintf(buf, sizeof buf, "mgf = %.15f, poisson %.15f", g, want);
    line("jump-mgf-equal-rates", std::abs(g - want) < 1e-12, buf);
  }
  {
    const auto p = sl::make_params(0.15, 3.0, 2.0, 0.5);
    const auto a = sl::simulate(p, sl::SwitchingLaw::exponential(), {1.0, 0.0}, sl::kMode0, 5.0, 7, {0.1});
    const auto b = sl::simulate(p, sl::SwitchingLaw::exponential(), {1.0, 0.0}, sl::kMode0, 5.0, 7, {0.1});
    std::ostringstream sa, sb;
    sl::io::write_trajectory_csv(sa, a);
    sl::io::write_trajectory_csv(sb, b);
    line("seeded-rerun", sa.str() == sb.str(), std::to_string(sa.str().size()) + " bytes");
  }
  return failures == 0 ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"switchlab: randomly switched linear systems"};
  app.set_version_flag("--version", std::string(sw::kVersion));
  app.require_subcommand(1);

  // chi-profile
  Common c_prof;
  Opt<double> pf_a, pf_b, pf_u, pf_bmin, pf_bmax, pf_mcT;
  Opt<int> pf_points, pf_mcpoints, pf_mcrep;
  Opt<bool> pf_degenerate, pf_mc;
  auto* prof = app.add_subcommand("chi-profile", "chi(beta) by quadrature on a log grid");
  add_common(prof, c_prof);
  prof->add_option("--a", pf_a);
  prof->add_option("--b", pf_b);
  prof->add_option("--u", pf_u);
  prof->add_option("--beta-min", pf_bmin);
  prof->add_option("--beta-max", pf_bmax);
  prof->add_option("--points", pf_points);
  prof->add_option("--degenerate", pf_degenerate, "allow b <= 1");
  prof->add_option("--mc", pf_mc, "overlay Monte Carlo points");
  prof->add_option("--mc-points", pf_mcpoints);
  prof->add_option("--mc-T", pf_mcT);
  prof->add_option("--mc-replicas", pf_mcrep);

  // sign-region
  Common c_sign;
  Opt<double> sg_a, sg_b, sg_bmin, sg_bmax, sg_umin, sg_umax, sg_tol;
  Opt<int> sg_nb, sg_nu;
  auto* sign = app.add_subcommand("sign-region", "sign of chi on a (beta, u) grid with its zero contour");
  add_common(sign, c_sign);
  sign->add_option("--a", sg_a);
  sign->add_option("--b", sg_b);
  sign->add_option("--beta-min", sg_bmin);
  sign->add_option("--beta-max", sg_bmax);
  sign->add_option("--beta-points", sg_nb);
  sign->add_option("--u-min", sg_umin);
  sign->add_option("--u-max", sg_umax);
  sign->add_option("--u-points", sg_nu);
  sign->add_option("--tolerance", sg_tol);

  // chi-det
  Common c_det;
  Opt<double> dt_a, dt_b, dt_u, dt_bmin, dt_bmax, dt_red;
  Opt<int> dt_points;
  Opt<std::int64_t> dt_periods;
  auto* det = app.add_subcommand("chi-det", "periodic switching exponent chi^d(beta)");
  add_common(det, c_det);
  det->add_option("--a", dt_a);
  det->add_option("--b", dt_b);
  det->add_option("--u", dt_u);
  det->add_option("--beta-min", dt_bmin);
  det->add_option("--beta-max", dt_bmax);
  det->add_option("--points", dt_points);
  det->add_option("--eigenline-beta", dt_red, "beta for the exceptional-x0 overlay");
  det->add_option("--periods", dt_periods);

  // chi-erlang
  Common c_erl;
  Opt<double> er_a, er_b, er_bmin, er_bmax, er_T;
  Opt<int> er_points, er_rep;
  std::vector<int> er_n;
  auto* erl = app.add_subcommand("chi-erlang", "Monte Carlo chi_n(beta) with Erlang-staged sojourns (u = 1/2)");
  add_common(erl, c_erl);
  erl->add_option("--a", er_a);
  erl->add_option("--b", er_b);
  erl->add_option("--n", er_n, "stage counts")->delimiter(',');
  erl->add_option("--beta-min", er_bmin);
  erl->add_option("--beta-max", er_bmax);
  erl->add_option("--points", er_points);
  erl->add_option("--T", er_T);
  erl->add_option("--replicas", er_rep);

  // tail
  Common c_tail;
  auto* tail = app.add_subcommand("tail", "tail dichotomy for a decentered system (needs --config)");
  add_common(tail, c_tail);

  // simulate
  Common c_sim;
  Opt<double> sm_a, sm_b, sm_beta, sm_u, sm_T, sm_dt;
  Opt<int> sm_stages, sm_i0;
  Opt<std::string> sm_law;
  Opt<bool> sm_degenerate;
  std::vector<double> sm_x0;
  auto* sim = app.add_subcommand("simulate", "one trajectory with dense sampling");
  add_common(sim, c_sim);
  sim->add_option("--a", sm_a);
  sim->add_option("--b", sm_b);
  sim->add_option("--beta", sm_beta);
  sim->add_option("--u", sm_u);
  sim->add_option("--law", sm_law)->check(CLI::IsMember({"exponential", "erlang", "periodic"}));
  sim->add_option("--stages", sm_stages);
  sim->add_option("--x0", sm_x0)->expected(2)->delimiter(',');
  sim->add_option("--i0", sm_i0)->check(CLI::IsMember({0, 1}));
  sim->add_option("--T", sm_T);
  sim->add_option("--dt", sm_dt);
  sim->add_option("--degenerate", sm_degenerate);

  auto* self = app.add_subcommand("selftest", "quick consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*self) return selftest();

    if (*prof) {
      const Layer l = load(c_prof, "chi-profile");
      const Resolved r = resolve(c_prof, l);
      sw::ChiProfileSpec s;
      l.apply(s.a, "a", pf_a);
      l.apply(s.b, "b", pf_b);
      l.apply(s.u, "u", pf_u);
      l.apply(s.degenerate, "degenerate", pf_degenerate);
      l.apply(s.beta_min, "beta_min", pf_bmin);
      l.apply(s.beta_max, "beta_max", pf_bmax);
      l.apply(s.points, "points", pf_points);
      l.apply(s.mc_overlay, "mc", pf_mc);
      l.apply(s.mc_points, "mc_points", pf_mcpoints);
      l.apply(s.mc_T, "mc_T", pf_mcT);
      l.apply(s.mc_replicas, "mc_replicas", pf_mcrep);
      s.seed = r.seed;
      s.workers = r.workers;
      (void)sl::make_params(s.a, s.b, 1.0, s.u, s.degenerate);
      return report("chi-profile", sw::cmd_chi_profile(s, r.out));
    }
    if (*sign) {
      const Layer l = load(c_sign, "sign-region");
      const Resolved r = resolve(c_sign, l);
      sw::SignRegionSpec s;
      l.apply(s.a, "a", sg_a);
      l.apply(s.b, "b", sg_b);
      l.apply(s.beta_min, "beta_min", sg_bmin);
      l.apply(s.beta_max, "beta_max", sg_bmax);
      l.apply(s.beta_points, "beta_points", sg_nb);
      l.apply(s.u_min, "u_min", sg_umin);
      l.apply(s.u_max, "u_max", sg_umax);
      l.apply(s.u_points, "u_points", sg_nu);
      l.apply(s.tolerance, "tolerance", sg_tol);
      s.workers = r.workers;
      (void)sl::make_params(s.a, s.b, 1.0, 0.5);
      return report("sign-region", sw::cmd_sign_region(s, r.out));
    }
    if (*det) {
      const Layer l = load(c_det, "chi-det");
      const Resolved r = resolve(c_det, l);
      sw::ChiDetSpec s;
      l.apply(s.a, "a", dt_a);
      l.apply(s.b, "b", dt_b);
      l.apply(s.u, "u", dt_u);
      l.apply(s.beta_min, "beta_min", dt_bmin);
      l.apply(s.beta_max, "beta_max", dt_bmax);
      l.apply(s.points, "points", dt_points);
      l.apply(s.periods, "periods", dt_periods);
      double red = s.eigenline_beta.value_or(1.0);
      l.apply(red, "eigenline_beta", dt_red);
      s.eigenline_beta = red > 0.0 ? std::optional<double>(red) : std::nullopt;  // <= 0 disables the overlay
      (void)sl::make_params(s.a, s.b, 1.0, s.u);
      return report("chi-det", sw::cmd_chi_det(s, r.out));
    }
    if (*erl) {
      const Layer l = load(c_erl, "chi-erlang");
      const Resolved r = resolve(c_erl, l);
      sw::ChiErlangSpec s;
      l.apply(s.a, "a", er_a);
      l.apply(s.b, "b", er_b);
      l.apply(s.beta_min, "beta_min", er_bmin);
      l.apply(s.beta_max, "beta_max", er_bmax);
      l.apply(s.points, "points", er_points);
      l.apply(s.T, "T", er_T);
      l.apply(s.replicas, "replicas", er_rep);
      if (l.cfg && l.cfg->has("chi-erlang.n")) {
        s.stages.clear();
        for (double v : l.cfg->vector("chi-erlang.n")) s.stages.push_back(static_cast<int>(v));
      }
      if (!er_n.empty()) s.stages = er_n;
      for (int n : s.stages) {
        if (n < 1) throw sl::InvalidArgument("stage counts must be >= 1");
      }
      s.seed = r.seed;
      s.workers = r.workers;
      (void)sl::make_params(s.a, s.b, 1.0, 0.5);
      return report("chi-erlang", sw::cmd_chi_erlang(s, r.out));
    }
    if (*tail) {
      if (c_tail.config.empty()) throw sl::io::ConfigError("tail: --config is required");
      const Layer l = load(c_tail, "tail");
      const Resolved r = resolve(c_tail, l);
      sw::TailSpec s = sw::tail_spec_from_config(*l.cfg);
      s.seed = r.seed;
      s.workers = r.workers;
      return report("tail", sw::cmd_tail(s, r.out));
    }
    if (*sim) {
      const Layer l = load(c_sim, "simulate");
      const Resolved r = resolve(c_sim, l);
      sw::SimulateSpec s;
      l.apply(s.a, "a", sm_a);
      l.apply(s.b, "b", sm_b);
      l.apply(s.beta, "beta", sm_beta);
      l.apply(s.u, "u", sm_u);
      l.apply(s.degenerate, "degenerate", sm_degenerate);
      l.apply(s.law, "law", sm_law);
      l.apply(s.stages, "stages", sm_stages);
      l.apply(s.i0, "i0", sm_i0);
      l.apply(s.T, "T", sm_T);
      l.apply(s.dt, "dt", sm_dt);
      if (l.cfg && l.cfg->has("simulate.x0")) {
        const auto v = l.cfg->vector("simulate.x0");
        if (v.size() != 2) throw sl::io::ConfigError(l.cfg->origin() + ": field 'simulate.x0' needs 2 entries");
        s.x0 = {v[0], v[1]};
      }
      if (!sm_x0.empty()) s.x0 = {sm_x0[0], sm_x0[1]};
      s.seed = r.seed;
      return report("simulate", sw::cmd_simulate(s, r.out));
    }
  } catch (const sl::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << " (achieved " << e.achieved() << ")\n";
    return kExitNumerical;
  } catch (const sl::Inconsistency& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const sl::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
