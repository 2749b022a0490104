#pragma once

// Event-driven simulation of the planar switched process with exact flows
// between switches, and the Monte Carlo estimators built on it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "switchlab/core.hpp"
#include "switchlab/errors.hpp"
#include "switchlab/flow.hpp"
#include "switchlab/invariant_measure.hpp"
#include "switchlab/parallel.hpp"
#include "switchlab/rng.hpp"

namespace switchlab {

class SwitchingLaw {
 public:
  enum class Kind { Exponential, ErlangStaged, Periodic };

  [[nodiscard]] static SwitchingLaw exponential() { return SwitchingLaw(Kind::Exponential, 1); }
  [[nodiscard]] static SwitchingLaw erlang(int stages) {
    if (stages < 1) throw InvalidArgument("erlang: stage count must be >= 1");
    return SwitchingLaw(Kind::ErlangStaged, stages);
  }
  [[nodiscard]] static SwitchingLaw periodic() { return SwitchingLaw(Kind::Periodic, 1); }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] int stages() const { return stages_; }

  [[nodiscard]] std::string name() const {
    switch (kind_) {
      case Kind::Exponential: return "exponential";
      case Kind::ErlangStaged: return "erlang-" + std::to_string(stages_);
      case Kind::Periodic: return "periodic";
    }
    return "unknown";
  }

  void validate(const SystemParams& p) const {
    if (kind_ == Kind::ErlangStaged && std::abs(p.u - 0.5) > 1e-12) {
      throw InvalidArgument("erlang-staged switching requires u = 1/2");
    }
  }

  /// Length of one sojourn in `mode`. Erlang: n stages of rate n beta / 2, i.e.
  /// Gamma(n, n beta / 2), mean 2/beta, variance 4/(n beta^2).
  [[nodiscard]] double draw_duration(Mode mode, const SystemParams& p, Rng& rng) const {
    switch (kind_) {
      case Kind::Exponential: return rng.exponential(mode.value() == 0 ? p.lambda0() : p.lambda1());
      case Kind::ErlangStaged: return rng.gamma(stages_, 0.5 * stages_ * p.beta);
      case Kind::Periodic: return mode.value() == 0 ? 1.0 / p.lambda0() : 1.0 / p.lambda1();
    }
    return 0.0;
  }

 private:
  SwitchingLaw(Kind k, int n) : kind_(k), stages_(n) {}
  Kind kind_;
  int stages_;
};

/// Stage index of the staged chain at the start of a sojourn in `mode`. The
/// driving matrix is A_{1{stage < n}}, so stages 0..n-1 run mode 1.
[[nodiscard]] inline int erlang_first_stage(Mode mode, int n) { return mode.value() == 1 ? 0 : n; }

/// x = y * e^{log_offset}. y is renormalised only when it leaves [1e-150, 1e150],
/// so a flow step costs one 2x2 product and no logarithm.
struct PlanarState {
  Vec2 y{1.0, 0.0};
  double log_offset = 0.0;
  double theta = 0.0;  // unwound polar angle
  Mode mode{};

  [[nodiscard]] double log_radius() const { return log_offset + std::log(norm(y)); }
  [[nodiscard]] Vec2 position() const {
    const double s = std::exp(log_offset);
    return {y[0] * s, y[1] * s};
  }
};

[[nodiscard]] inline PlanarState make_planar_state(const Vec2& x0, Mode i0) {
  const double r = norm(x0);
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("initial state must be finite and non-zero");
  PlanarState s;
  s.y = {x0[0] / r, x0[1] / r};
  s.log_offset = std::log(r);
  s.theta = std::atan2(x0[1], x0[0]);
  s.mode = i0;
  return s;
}

/// Exact flow for time dt in the current mode. `track_angle` keeps the unwound angle.
inline void flow_planar(PlanarState& s, double dt, const SystemParams& p, bool track_angle = true) {
  s.y = rotation_part(dt, s.mode, p).apply(s.y);
  s.log_offset -= p.a * dt;
  const double n2 = s.y[0] * s.y[0] + s.y[1] * s.y[1];
  if (n2 > 1e300 || n2 < 1e-300) {
    const double n = std::sqrt(n2);
    s.y = {s.y[0] / n, s.y[1] / n};
    s.log_offset += std::log(n);
  }
  if (track_angle) s.theta = advance_angle(s.theta, dt, s.mode, p);
}

struct JumpEvent {
  double t = 0.0;
  int mode = 0;  // mode entered at t
};

struct TrajectorySample {
  double t = 0.0;
  std::vector<double> x;
  int mode = 0;
  double log_radius = 0.0;
  double theta = std::numeric_limits<double>::quiet_NaN();  // planar runs only
};

struct TrajectoryRecord {
  std::vector<JumpEvent> events;
  std::vector<TrajectorySample> samples;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::string law;
};

struct SampleOptions {
  double dt = 0.0;  // uniform grid spacing; 0 keeps only t = 0, switch times and T
};

namespace detail {

inline TrajectorySample planar_sample(double t, const PlanarState& s) {
  const Vec2 x = s.position();
  return {t, {x[0], x[1]}, s.mode.value(), s.log_radius(), s.theta};
}

}  // namespace detail

/// One path on [0, T] with exact flows. Samples are taken at t = 0, on the
/// uniform grid, at every switch (with the new mode) and at T. The angle lift
/// is exact, so it stays continuous for any grid spacing.
[[nodiscard]] inline TrajectoryRecord simulate(const SystemParams& p, const SwitchingLaw& law, const Vec2& x0,
                                               Mode i0, double T, std::uint64_t seed,
                                               const SampleOptions& opts = {}) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("simulate: horizon must be > 0");
  if (opts.dt < 0.0) throw InvalidArgument("simulate: sample spacing must be >= 0");
  law.validate(p);
  Rng rng(seed, 0);
  TrajectoryRecord rec;
  rec.seed = seed;
  rec.horizon = T;
  rec.law = law.name();
  PlanarState s = make_planar_state(x0, i0);
  rec.samples.push_back(detail::planar_sample(0.0, s));
  double t = 0.0;
  std::int64_t k = 1;
  while (t < T) {
    const double tau = law.draw_duration(s.mode, p, rng);
    const double end = std::min(t + tau, T);
    if (opts.dt > 0.0) {
      for (; static_cast<double>(k) * opts.dt < end; ++k) {
        const double tk = static_cast<double>(k) * opts.dt;
        PlanarState g = s;
        flow_planar(g, tk - t, p);
        rec.samples.push_back(detail::planar_sample(tk, g));
      }
    }
    flow_planar(s, end - t, p);
    t = end;
    if (t < T) {
      s.mode = s.mode.flip();
      rec.events.push_back({t, s.mode.value()});
    }
    rec.samples.push_back(detail::planar_sample(t, s));
  }
  return rec;
}

/// (1/T) log(|X_T| / |X_0|) for one path; angle is not tracked.
[[nodiscard]] inline double log_growth_rate(const SystemParams& p, const SwitchingLaw& law, const Vec2& x0,
                                            Mode i0, double T, Rng& rng) {
  PlanarState s = make_planar_state(x0, i0);
  const double start = s.log_radius();
  double t = 0.0;
  while (t < T) {
    const double end = std::min(t + law.draw_duration(s.mode, p, rng), T);
    flow_planar(s, end - t, p, false);
    t = end;
    s.mode = s.mode.flip();
  }
  return (s.log_radius() - start) / T;
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int replicas = 0;
  double horizon = 0.0;
};

[[nodiscard]] inline McEstimate summarize(const std::vector<double>& v, double horizon) {
  if (v.empty()) throw InvalidArgument("summarize: no replicas");
  McEstimate e;
  e.replicas = static_cast<int>(v.size());
  e.horizon = horizon;
  double s = 0.0;
  for (double x : v) s += x;
  e.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - e.mean) * (x - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return e;
}

/// Per-replica growth rates. Replica r uses stream (seed, r): theta_0 uniform, and
/// i_0 from the stationary occupancy (mode 0 w.p. 1 - u) for exponential switching,
/// a fair coin for Erlang, mode 0 for periodic.
[[nodiscard]] inline std::vector<double> mc_growth_samples(const SystemParams& p, const SwitchingLaw& law, double T,
                                                           int replicas, std::uint64_t seed, unsigned workers = 1) {
  if (replicas < 1) throw InvalidArgument("replicas must be >= 1");
  if (!(T > 0.0)) throw InvalidArgument("horizon must be > 0");
  law.validate(p);
  return parallel_map(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
    Rng rng(seed, r);
    const double th = 2.0 * kPi * rng.uniform();
    const double coin = rng.uniform();
    Mode i0 = kMode0;
    if (law.kind() == SwitchingLaw::Kind::Exponential) i0 = Mode(coin < 1.0 - p.u ? 0 : 1);
    if (law.kind() == SwitchingLaw::Kind::ErlangStaged) i0 = Mode(coin < 0.5 ? 0 : 1);
    return log_growth_rate(p, law, {std::cos(th), std::sin(th)}, i0, T, rng);
  });
}

[[nodiscard]] inline ChiResult estimate_chi_mc(const SystemParams& p, const SwitchingLaw& law, double T, int replicas,
                                               std::uint64_t seed, unsigned workers = 1) {
  const McEstimate e = summarize(mc_growth_samples(p, law, T, replicas, seed, workers), T);
  ChiResult r;
  r.value = e.mean;
  r.error = e.std_error;
  r.params = p;
  r.method = law.kind() == SwitchingLaw::Kind::ErlangStaged ? ChiMethod::ErlangMonteCarlo : ChiMethod::MonteCarlo;
  if (law.kind() != SwitchingLaw::Kind::Periodic && T * p.beta < 100.0) {
    r.warnings.push_back("horizon gives fewer than 100 expected switches (T * beta < 100)");
  }
  return r;
}

[[nodiscard]] inline ChiResult estimate_chi_erlang(const SystemParams& p, int n, double T, int replicas,
                                                   std::uint64_t seed, unsigned workers = 1) {
  return estimate_chi_mc(p, SwitchingLaw::erlang(n), T, replicas, seed, workers);
}

/// E[sup_{t <= T} |X^n_t - x_t|] where X^n uses Erlang(n) sojourns and x uses the
/// deterministic sojourns 2/beta. Both start at (1, 0) at the beginning of a
/// mode-1 sojourn (stage 0). The sup is taken over a grid of spacing `grid_dt`
/// joined with all switch times of both paths.
[[nodiscard]] inline McEstimate pathwise_convergence_stat(const SystemParams& p, int n, double T, int replicas,
                                                          std::uint64_t seed, double grid_dt = 1e-2,
                                                          unsigned workers = 1) {
  const SwitchingLaw law = SwitchingLaw::erlang(n);
  law.validate(p);
  if (!(T > 0.0) || !(grid_dt > 0.0)) throw InvalidArgument("pathwise_convergence_stat: T and grid must be > 0");
  if (replicas < 1) throw InvalidArgument("replicas must be >= 1");
  const double tau = 2.0 / p.beta;
  auto sup_gap = [&](std::size_t r) {
    Rng rng(seed, r);
    std::vector<double> rand_sw;
    for (double t = law.draw_duration(kMode1, p, rng); t < T; t += law.draw_duration(kMode1, p, rng)) {
      rand_sw.push_back(t);
    }
    std::vector<double> times;
    for (std::int64_t k = 0; static_cast<double>(k) * grid_dt < T; ++k) times.push_back(static_cast<double>(k) * grid_dt);
    times.push_back(T);
    times.insert(times.end(), rand_sw.begin(), rand_sw.end());
    for (std::int64_t k = 1; static_cast<double>(k) * tau < T; ++k) times.push_back(static_cast<double>(k) * tau);
    std::sort(times.begin(), times.end());

    // walk both paths through the merged times
    auto walker = [&](auto next_switch) {
      PlanarState s = make_planar_state({1.0, 0.0}, kMode1);
      double t = 0.0;
      std::size_t sw = 0;
      std::vector<Vec2> out;
      out.reserve(times.size());
      for (double target : times) {
        double ns;
        while ((ns = next_switch(sw)) <= target) {
          flow_planar(s, ns - t, p, false);
          t = ns;
          s.mode = s.mode.flip();
          ++sw;
        }
        flow_planar(s, target - t, p, false);
        t = target;
        out.push_back(s.position());
      }
      return out;
    };
    const double inf = std::numeric_limits<double>::infinity();
    const auto xr = walker([&](std::size_t i) { return i < rand_sw.size() ? rand_sw[i] : inf; });
    const auto xd = walker([&](std::size_t i) { return tau * static_cast<double>(i + 1); });
    double gap = 0.0;
    for (std::size_t i = 0; i < xr.size(); ++i) {
      gap = std::max(gap, std::hypot(xr[i][0] - xd[i][0], xr[i][1] - xd[i][1]));
    }
    return gap;
  };
  return summarize(parallel_map(static_cast<std::size_t>(replicas), workers, sup_gap), T);
}

struct MomentEstimate {
  double chi_p = 0.0;  // (1/t) log Psi_p(t), maximised over the start grid
  double std_error = 0.0;  // delta-method error of the maximising grid point
  double chi_mean = 0.0;  // (1/t) E[log |X_t|/|X_0|] pooled over all starts
  double chi_mean_std_error = 0.0;
  double theta_argmax = 0.0;
  int mode_argmax = 0;
  int replicas = 0;
  double horizon = 0.0;
};

/// Psi_p(t) estimate: for each start (theta_j, i), j < theta_grid, draws
/// `replicas` exponential-switching paths and forms m = mean(|X_t|^p) in
/// log-sum-exp form. Variance of exp(p Z) grows quickly with p t, so keep p t
/// of order a few units.
[[nodiscard]] inline MomentEstimate estimate_chi_p(const SystemParams& p, double pexp, double t, int theta_grid,
                                                   int replicas, std::uint64_t seed, unsigned workers = 1) {
  if (!(pexp > 0.0)) throw InvalidArgument("estimate_chi_p: p must be > 0");
  if (!(t > 0.0)) throw InvalidArgument("estimate_chi_p: t must be > 0");
  if (theta_grid < 1 || replicas < 2) throw InvalidArgument("estimate_chi_p: need grid >= 1 and replicas >= 2");
  const SwitchingLaw law = SwitchingLaw::exponential();
  struct Cell {
    double log_m, se, mean_z;
    std::vector<double> z;
  };
  const auto cells = parallel_map(static_cast<std::size_t>(2 * theta_grid), workers, [&](std::size_t c) {
    const int j = static_cast<int>(c / 2);
    const Mode i0(static_cast<int>(c % 2));
    const double th = kPi * j / theta_grid;  // |X| is even in x, so [0, pi) covers the circle
    Cell cell;
    cell.z.resize(static_cast<std::size_t>(replicas));
    for (int r = 0; r < replicas; ++r) {
      Rng rng(seed, c, static_cast<std::uint64_t>(r));
      cell.z[r] = t * log_growth_rate(p, law, {std::cos(th), std::sin(th)}, i0, t, rng);
    }
    double zmax = -std::numeric_limits<double>::infinity();
    double zsum = 0.0;
    for (double z : cell.z) {
      zmax = std::max(zmax, pexp * z);
      zsum += z;
    }
    double s = 0.0, s2 = 0.0;
    for (double z : cell.z) {
      const double w = std::exp(pexp * z - zmax);
      s += w;
      s2 += w * w;
    }
    const double nr = replicas;
    const double m = s / nr;
    const double var = std::max(0.0, (s2 - nr * m * m) / (nr - 1.0));
    cell.log_m = zmax + std::log(m);
    cell.se = std::sqrt(var / nr) / m;
    cell.mean_z = zsum / nr;
    return cell;
  });
  MomentEstimate out;
  out.replicas = replicas;
  out.horizon = t;
  std::size_t best = 0;
  for (std::size_t c = 1; c < cells.size(); ++c) {
    if (cells[c].log_m > cells[best].log_m) best = c;
  }
  out.chi_p = cells[best].log_m / (pexp * t);
  out.std_error = cells[best].se / (pexp * t);
  out.theta_argmax = kPi * static_cast<double>(best / 2) / theta_grid;
  out.mode_argmax = static_cast<int>(best % 2);
  std::vector<double> pooled;
  for (const auto& c : cells) {
    for (double z : c.z) pooled.push_back(z / t);
  }
  const McEstimate pm = summarize(pooled, t);
  out.chi_mean = pm.mean;
  out.chi_mean_std_error = pm.std_error;
  return out;
}

/// E_{i0}[c^{N_t}] for the two-state chain with leaving rates (lambda0, lambda1).
/// G solves y'' + S y' + lambda0 lambda1 (1 - c^2) y = 0, G(0) = 1,
/// G'(0) = lambda_{i0} (c - 1), S = lambda0 + lambda1. With omega = sqrt(D)/2,
/// G = e^{-S t/2} [cosh(omega t) + (G'(0) + S/2) sinh(omega t)/omega].
[[nodiscard]] inline double jump_count_mgf(double c, double t, double lambda0, double lambda1, Mode i0) {
  if (!(lambda0 > 0.0 && lambda1 > 0.0)) throw InvalidArgument("jump_count_mgf: rates must be > 0");
  if (!(t >= 0.0)) throw InvalidArgument("jump_count_mgf: t must be >= 0");
  const double S = lambda0 + lambda1;
  const double half = 0.5 * S;
  const double q = (i0.value() == 0 ? lambda0 : lambda1) * (c - 1.0) + half;
  // (l0 - l1)^2 + 4 l0 l1 c^2 written without cancellation
  const double D = (lambda0 - lambda1) * (lambda0 - lambda1) + 4.0 * lambda0 * lambda1 * c * c;
  if (D < 0.0) {
    const double nu = 0.5 * std::sqrt(-D);
    return std::exp(-half * t) * (std::cos(nu * t) + q * std::sin(nu * t) / nu);
  }
  const double w = 0.5 * std::sqrt(D);
  const double wt = w * t;
  if (wt < 1e-4) {
    // repeated-root limit: cosh -> 1 + (wt)^2/2, sinh(wt)/w -> t (1 + (wt)^2/6)
    return std::exp(-half * t) * (1.0 + 0.5 * wt * wt + q * t * (1.0 + wt * wt / 6.0));
  }
  return 0.5 * std::exp((w - half) * t) * ((1.0 + q / w) + (1.0 - q / w) * std::exp(-2.0 * wt));
}

/// Monte Carlo E_{i0}[c^{N_t}] (oracle for jump_count_mgf).
[[nodiscard]] inline McEstimate jump_count_mc(double c, double t, double lambda0, double lambda1, Mode i0,
                                              int samples, std::uint64_t seed) {
  if (samples < 2) throw InvalidArgument("jump_count_mc: need >= 2 samples");
  Rng rng(seed, 0);
  std::vector<double> v(static_cast<std::size_t>(samples));
  for (auto& x : v) {
    Mode m = i0;
    int n = 0;
    for (double s = rng.exponential(m.value() == 0 ? lambda0 : lambda1); s < t;
         s += rng.exponential(m.value() == 0 ? lambda0 : lambda1)) {
      m = m.flip();
      ++n;
    }
    x = std::pow(c, n);
  }
  return summarize(v, t);
}

struct ContractionReport {
  double empirical = 0.0;         // E[|D_t|^p]^{1/p} with |D_0| = 1
  double empirical_stderr = 0.0;  // delta-method error
  double analytic = 0.0;          // C G_{i0}(C^p, t)^{1/p} e^{-eta t}
  bool holds = true;              // empirical <= analytic + 3 stderr
};

/// Coupled difference D_t = X_t - X'_t of two copies sharing the switching path.
/// The affine parts cancel, so D_t is the random matrix product applied to D_0.
/// From |D_t| <= C^{N_t + 1} e^{-eta t} |D_0| the L^p norm is bounded by
/// C G_{i0}(C^p, t)^{1/p} e^{-eta t}.
[[nodiscard]] inline ContractionReport coupling_contraction_check(const Eigen::MatrixXd& A0, const Eigen::MatrixXd& A1,
                                                                  double lambda0, double lambda1,
                                                                  const HurwitzEnvelope& env, double pexp, double t,
                                                                  int replicas, std::uint64_t seed,
                                                                  Mode i0 = kMode0) {
  if (A0.rows() != A1.rows() || A0.cols() != A1.cols()) throw DimensionMismatch("coupling: A0/A1 shapes differ");
  if (!(pexp > 0.0)) throw InvalidArgument("coupling: p must be > 0");
  if (replicas < 2) throw InvalidArgument("coupling: need >= 2 replicas");
  const FlowOperator f0(A0), f1(A1);
  const Eigen::Index d = A0.rows();
  std::vector<double> w(static_cast<std::size_t>(replicas));
  for (int r = 0; r < replicas; ++r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    Eigen::VectorXd D(d);
    for (Eigen::Index k = 0; k < d; ++k) D(k) = rng.normal();
    D.normalize();
    Mode m = i0;
    double s = 0.0;
    while (s < t) {
      const double end = std::min(t, s + rng.exponential(m.value() == 0 ? lambda0 : lambda1));
      D = (m.value() == 0 ? f0 : f1)(end - s) * D;
      s = end;
      m = m.flip();
    }
    w[r] = std::pow(D.norm(), pexp);
  }
  const McEstimate e = summarize(w, t);
  ContractionReport rep;
  rep.empirical = std::pow(e.mean, 1.0 / pexp);
  rep.empirical_stderr = rep.empirical * e.std_error / (pexp * e.mean);
  rep.analytic = env.C * std::pow(jump_count_mgf(std::pow(env.C, pexp), t, lambda0, lambda1, i0), 1.0 / pexp) *
                 std::exp(-env.eta * t);
  rep.holds = rep.empirical <= rep.analytic + 3.0 * rep.empirical_stderr;
  return rep;
}

[[nodiscard]] inline ContractionReport coupling_contraction_check(const SystemParams& p, const HurwitzEnvelope& env,
                                                                  double pexp, double t, int replicas,
                                                                  std::uint64_t seed, Mode i0 = kMode0) {
  const auto [a0, a1] = build_matrices(p);
  return coupling_contraction_check(a0.to_eigen(), a1.to_eigen(), p.lambda0(), p.lambda1(), env, pexp, t, replicas,
                                    seed, i0);
}

}  // namespace switchlab
