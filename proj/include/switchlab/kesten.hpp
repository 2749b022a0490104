#pragma once

// Decentered switched system x' = A_i (x - b_i), its chain observed every
// second switch, and tail-index estimation for the stationary law.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "switchlab/core.hpp"
#include "switchlab/errors.hpp"
#include "switchlab/flow.hpp"
#include "switchlab/parallel.hpp"
#include "switchlab/rng.hpp"
#include "switchlab/simulator.hpp"

namespace switchlab {

class DecenteredSystem {
 public:
  DecenteredSystem() = default;
  /// Checks Hurwitz generators and b0 != b1. `allow_equal_attractors` admits
  /// b0 == b1 for reductions to the centered system.
  DecenteredSystem(Eigen::MatrixXd A0, Eigen::MatrixXd A1, Eigen::VectorXd b0, Eigen::VectorXd b1, double lambda0,
                   double lambda1, bool allow_equal_attractors = false)
      : b0_(std::move(b0)), b1_(std::move(b1)), lambda0_(lambda0), lambda1_(lambda1) {
    const Eigen::Index d = A0.rows();
    if (d < 2) throw DimensionMismatch("decentered system: dimension must be >= 2");
    if (A0.cols() != d || A1.rows() != d || A1.cols() != d || b0_.size() != d || b1_.size() != d) {
      throw DimensionMismatch("decentered system: A0, A1, b0, b1 sizes disagree");
    }
    if (!(lambda0 > 0.0 && lambda1 > 0.0)) throw InvalidArgument("decentered system: rates must be > 0");
    if (!is_hurwitz(A0) || !is_hurwitz(A1)) throw InvalidArgument("decentered system: A0 and A1 must be Hurwitz");
    if (!allow_equal_attractors && (b0_ - b1_).norm() == 0.0) {
      throw InvalidArgument("decentered system: b0 and b1 must differ");
    }
    flows_ = {FlowOperator(std::move(A0)), FlowOperator(std::move(A1))};
  }

  [[nodiscard]] Eigen::Index dim() const { return b0_.size(); }
  [[nodiscard]] const Eigen::MatrixXd& A(Mode m) const { return flows_[m.value()].generator(); }
  [[nodiscard]] const Eigen::VectorXd& b(Mode m) const { return m.value() == 0 ? b0_ : b1_; }
  [[nodiscard]] double rate(Mode m) const { return m.value() == 0 ? lambda0_ : lambda1_; }
  [[nodiscard]] const FlowOperator& flow(Mode m) const { return flows_[m.value()]; }
  [[nodiscard]] const std::vector<FlowOperator>& flows() const { return flows_; }

  /// b_i + e^{tA_i}(x - b_i)
  [[nodiscard]] Eigen::VectorXd affine_flow(const Eigen::VectorXd& x, double t, Mode m) const {
    const auto& bi = b(m);
    return bi + flows_[m.value()](t) * (x - bi);
  }

 private:
  std::vector<FlowOperator> flows_;
  Eigen::VectorXd b0_, b1_;
  double lambda0_ = 1.0, lambda1_ = 1.0;
};

/// Planar pair from build_matrices with rates (beta u, beta (1-u)).
[[nodiscard]] inline DecenteredSystem planar_decentered(const SystemParams& p, const Eigen::Vector2d& b0,
                                                        const Eigen::Vector2d& b1,
                                                        bool allow_equal_attractors = false) {
  const auto [a0, a1] = build_matrices(p);
  return DecenteredSystem(a0.to_eigen(), a1.to_eigen(), b0, b1, p.lambda0(), p.lambda1(), allow_equal_attractors);
}

/// Three-dimensional pair whose single-mode flows attract the sphere
/// projection to two different great circles when a < 1.
[[nodiscard]] inline DecenteredSystem example68_system(double a, double b, const Eigen::Vector3d& b0,
                                                       const Eigen::Vector3d& b1, double lambda0 = 1.0,
                                                       double lambda1 = 1.0, std::vector<std::string>* warnings = nullptr) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("example68_system: a and b must be > 0");
  if (a >= 1.0 && warnings) warnings->push_back("a >= 1: the two attracting circles argument does not apply");
  Eigen::MatrixXd A0(3, 3), A1(3, 3);
  A0 << -a, b, 0.0, -1.0 / b, -a, 0.0, 0.0, 0.0, -1.0;
  A1 << -1.0, 0.0, 0.0, 0.0, -a, b, 0.0, -1.0 / b, -a;
  return DecenteredSystem(A0, A1, b0, b1, lambda0, lambda1);
}

[[nodiscard]] inline HurwitzEnvelope hurwitz_envelope(const DecenteredSystem& sys, double eta_fraction = 0.5,
                                                      double t_max = 20.0, int t_steps = 2001) {
  return hurwitz_envelope(sys.flows(), eta_fraction, t_max, t_steps);
}

/// Largest sampled value of |e^{tA_i} x| / (C e^{-eta t} |x|) over a t-grid on
/// [0, t_max] and `n_x` random directions. <= 1 certifies the envelope there.
[[nodiscard]] inline double envelope_worst_ratio(const DecenteredSystem& sys, const HurwitzEnvelope& env,
                                                 int n_x = 1000, double t_max = 20.0, int t_steps = 401,
                                                 std::uint64_t seed = 7) {
  Rng rng(seed, 0);
  std::vector<Eigen::VectorXd> xs;
  for (int j = 0; j < n_x; ++j) {
    Eigen::VectorXd x(sys.dim());
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = rng.normal();
    xs.push_back(x);
  }
  double worst = 0.0;
  for (int m = 0; m < 2; ++m) {
    for (int s = 0; s < t_steps; ++s) {
      const double t = t_max * s / (t_steps - 1);
      const Eigen::MatrixXd E = sys.flow(Mode(m))(t);
      const double bound = env.C * std::exp(-env.eta * t);
      for (const auto& x : xs) worst = std::max(worst, (E * x).norm() / (x.norm() * bound));
    }
  }
  return worst;
}

/// Exact affine flows between exponential switches. Uses the same random stream
/// layout as simulate(), so b0 = b1 = 0 reproduces the centered path.
[[nodiscard]] inline TrajectoryRecord simulate_decentered(const DecenteredSystem& sys, const Eigen::VectorXd& x0,
                                                          Mode i0, double T, std::uint64_t seed,
                                                          const SampleOptions& opts = {}) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("simulate_decentered: horizon must be > 0");
  if (x0.size() != sys.dim()) throw DimensionMismatch("simulate_decentered: x0 has the wrong dimension");
  if (opts.dt < 0.0) throw InvalidArgument("simulate_decentered: sample spacing must be >= 0");
  Rng rng(seed, 0);
  TrajectoryRecord rec;
  rec.seed = seed;
  rec.horizon = T;
  rec.law = "exponential";
  const bool planar = sys.dim() == 2;
  double last_theta = 0.0;
  bool have_theta = false;
  auto push = [&](double t, const Eigen::VectorXd& x, Mode m) {
    TrajectorySample s;
    s.t = t;
    s.x.assign(x.data(), x.data() + x.size());
    s.mode = m.value();
    s.log_radius = std::log(x.norm());
    if (planar && x.norm() > 0.0) {
      // unwrap against the previous sample
      double th = std::atan2(x(1), x(0));
      if (have_theta) th += 2.0 * kPi * std::round((last_theta - th) / (2.0 * kPi));
      s.theta = last_theta = th;
      have_theta = true;
    }
    rec.samples.push_back(std::move(s));
  };
  Eigen::VectorXd x = x0;
  Mode m = i0;
  push(0.0, x, m);
  double t = 0.0;
  std::int64_t k = 1;
  while (t < T) {
    const double end = std::min(t + rng.exponential(sys.rate(m)), T);
    if (opts.dt > 0.0) {
      for (; static_cast<double>(k) * opts.dt < end; ++k) {
        const double tk = static_cast<double>(k) * opts.dt;
        push(tk, sys.affine_flow(x, tk - t, m), m);
      }
    }
    x = sys.affine_flow(x, end - t, m);
    t = end;
    if (t < T) {
      m = m.flip();
      rec.events.push_back({t, m.value()});
    }
    push(t, x, m);
  }
  return rec;
}

/// Y_1..Y_n as columns: the state at every second switch of a path started in
/// mode 0 at Y_0, Y_n = b1 + e^{tau' A1}(b0 + e^{tau A0}(Y_{n-1} - b0) - b1).
/// Draws tau, tau' from stream (seed, 0) in the order simulate_decentered does.
[[nodiscard]] inline Eigen::MatrixXd yn_chain(const DecenteredSystem& sys, const Eigen::VectorXd& y0,
                                              std::int64_t n_steps, std::uint64_t seed) {
  if (n_steps < 1) throw InvalidArgument("yn_chain: n_steps must be >= 1");
  if (y0.size() != sys.dim()) throw DimensionMismatch("yn_chain: y0 has the wrong dimension");
  Rng rng(seed, 0);
  Eigen::MatrixXd out(sys.dim(), n_steps);
  Eigen::VectorXd y = y0;
  for (std::int64_t n = 0; n < n_steps; ++n) {
    const double tau = rng.exponential(sys.rate(kMode0));
    const double tau1 = rng.exponential(sys.rate(kMode1));
    y = sys.affine_flow(sys.affine_flow(y, tau, kMode0), tau1, kMode1);
    out.col(n) = y;
  }
  return out;
}

/// |Y_n| for n > burn-in, burn-in = max(min_burn, burn_fraction * n_steps).
[[nodiscard]] inline std::vector<double> stationary_norms(const Eigen::MatrixXd& chain, double burn_fraction = 0.1,
                                                          std::int64_t min_burn = 1000) {
  const std::int64_t n = chain.cols();
  const std::int64_t burn = std::max<std::int64_t>(min_burn, static_cast<std::int64_t>(burn_fraction * n));
  if (burn >= n) throw InvalidArgument("stationary_norms: chain shorter than the burn-in");
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(n - burn));
  for (std::int64_t j = burn; j < n; ++j) v.push_back(chain.col(j).norm());
  return v;
}

struct SampleBOptions {
  Mode start = kMode0;
  int blocks = 1;                 // norm of a product of this many i.i.d. copies of B
  bool zero_durations = false;    // test hook: every tau = 0
  unsigned workers = 1;
};

/// Samples of |B_m ... B_1| (spectral norm), B = e^{tau_k A_{I_k}} ... e^{tau_0 A_{I_0}}
/// with alternating modes and tau_j ~ Exp(lambda_{I_j}).
[[nodiscard]] inline std::vector<double> sample_B(const Eigen::MatrixXd& A0, const Eigen::MatrixXd& A1, int k,
                                                  double lambda0, double lambda1, std::int64_t n_samples,
                                                  std::uint64_t seed, const SampleBOptions& opts = {}) {
  if (k < 1 || k % 2 == 0) throw InvalidArgument("sample_B: k must be odd");
  if (n_samples < 1) throw InvalidArgument("sample_B: n_samples must be >= 1");
  if (opts.blocks < 1) throw InvalidArgument("sample_B: blocks must be >= 1");
  if (!(lambda0 > 0.0 && lambda1 > 0.0)) throw InvalidArgument("sample_B: rates must be > 0");
  if (A0.rows() != A1.rows() || A0.rows() != A0.cols() || A1.rows() != A1.cols()) {
    throw DimensionMismatch("sample_B: A0/A1 must be square of equal size");
  }
  const FlowOperator f0(A0), f1(A1);
  const Eigen::Index d = A0.rows();
  constexpr std::int64_t kChunk = 4096;
  const std::int64_t chunks = (n_samples + kChunk - 1) / kChunk;
  auto parts = parallel_map(static_cast<std::size_t>(chunks), opts.workers, [&](std::size_t c) {
    Rng rng(seed, c);
    const std::int64_t lo = static_cast<std::int64_t>(c) * kChunk;
    const std::int64_t hi = std::min(n_samples, lo + kChunk);
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(hi - lo));
    for (std::int64_t s = lo; s < hi; ++s) {
      Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d);
      for (int blk = 0; blk < opts.blocks; ++blk) {
        Mode m = opts.start;
        for (int j = 0; j <= k; ++j) {
          const double tau = opts.zero_durations ? 0.0 : rng.exponential(m.value() == 0 ? lambda0 : lambda1);
          M = (m.value() == 0 ? f0 : f1)(tau) * M;
          m = m.flip();
        }
      }
      v.push_back(d == 2 ? spectral_norm(Matrix2{M(0, 0), M(0, 1), M(1, 0), M(1, 1)})
                         : Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0));
    }
    return v;
  });
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

[[nodiscard]] inline std::vector<double> sample_B(const DecenteredSystem& sys, int k, std::int64_t n_samples,
                                                  std::uint64_t seed, const SampleBOptions& opts = {}) {
  return sample_B(sys.A(kMode0), sys.A(kMode1), k, sys.rate(kMode0), sys.rate(kMode1), n_samples, seed, opts);
}

enum class TailMethod { MomentRoot, MomentIncrement, Hill };

[[nodiscard]] inline std::string to_string(TailMethod m) {
  switch (m) {
    case TailMethod::MomentRoot: return "moment-root";
    case TailMethod::MomentIncrement: return "moment-increment";
    case TailMethod::Hill: return "hill";
  }
  return "unknown";
}

struct TailEstimate {
  double x1 = std::numeric_limits<double>::quiet_NaN();
  TailMethod method = TailMethod::MomentRoot;
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  std::size_t sample_size = 0;
  bool found = false;
  int blocks = 1;               // block size m for the moment roots
  bool light_tail_flag = false;  // Hill only
  int bootstrap_used = 0;
  std::string message;
};

/// log mean(s^p) for samples given by their logarithms, in log-sum-exp form.
/// `log_max` may pass max(log_s) to skip the first pass (p > 0 only).
[[nodiscard]] inline double log_moment(const std::vector<double>& log_s, double p,
                                       double log_max = std::numeric_limits<double>::quiet_NaN()) {
  if (log_s.empty()) throw InvalidArgument("log_moment: no samples");
  if (p == 0.0) return 0.0;
  double mx = -std::numeric_limits<double>::infinity();
  if (p > 0.0 && !std::isnan(log_max)) {
    mx = p * log_max;
  } else {
    for (double l : log_s) mx = std::max(mx, p * l);
  }
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double l : log_s) s += std::exp(p * l - mx);
  return mx + std::log(s / static_cast<double>(log_s.size()));
}

struct MomentRootOptions {
  double p_max = 8.0;
  double tolerance = 1e-9;  // on |log m(x1)|
  int bootstrap = 100;
  std::uint64_t seed = 11;
};

namespace detail {

inline std::vector<double> logs_of(const std::vector<double>& s) {
  std::vector<double> l(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] >= 0.0) || !std::isfinite(s[i])) throw InvalidArgument("tail samples must be finite and >= 0");
    l[i] = std::log(s[i]);
  }
  return l;
}

inline double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(h));
  const std::size_t j = std::min(i + 1, v.size() - 1);
  return v[i] + (h - static_cast<double>(i)) * (v[j] - v[i]);
}

/// Root of f on [lo, hi] by TOMS 748 when f(lo) < 0 < f(hi).
/// `x_rel` is the relative bracket width at which TOMS 748 stops.
template <class F>
std::pair<bool, double> bracketed_root(F f, double lo, double hi, double tol, double x_rel = 1e-12) {
  const double flo = f(lo), fhi = f(hi);
  if (!(flo < 0.0 && fhi > 0.0)) return {false, std::numeric_limits<double>::quiet_NaN()};
  std::uintmax_t iters = 200;
  auto stop = [&](double a, double b) { return std::abs(b - a) <= x_rel * std::max(1.0, std::abs(a)); };
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, iters);
  double x = 0.5 * (r.first + r.second);
  // refine until the residual meets the tolerance (bisection fallback)
  double a = r.first, b = r.second;
  for (int i = 0; i < 200 && std::abs(f(x)) > tol && b - a > 0.0; ++i) {
    (f(x) < 0.0 ? a : b) = x;
    x = 0.5 * (a + b);
  }
  return {true, x};
}

// Bootstrap replicates sit close to the full-sample root: try a narrow bracket
// around it first and stop at 1e-6 relative width.
template <class F>
std::pair<bool, double> bootstrap_root(F f, double centre, double lo, double hi) {
  const double a = std::max(lo, 0.5 * centre), b = std::min(hi, 1.5 * centre);
  if (f(a) < 0.0 && f(b) > 0.0) return bracketed_root(f, a, b, std::numeric_limits<double>::infinity(), 1e-6);
  return bracketed_root(f, lo, hi, std::numeric_limits<double>::infinity(), 1e-6);
}

inline void set_ci(TailEstimate& e, std::vector<double> boot) {
  std::sort(boot.begin(), boot.end());
  e.bootstrap_used = static_cast<int>(boot.size());
  if (boot.empty()) {
    e.ci_low = e.ci_high = e.x1;
    return;
  }
  e.ci_low = std::min(e.x1, quantile_sorted(boot, 0.025));
  e.ci_high = std::max(e.x1, quantile_sorted(boot, 0.975));
}

}  // namespace detail

/// x1 with mean(|B|^{x1}) = 1 on the given samples (for block samples of size m
/// this is the root of (1/m) log E|B_m ... B_1|^p). Percentile bootstrap CI.
/// Reports found = false when log m(p) has no sign change on [p_small, p_max].
[[nodiscard]] inline TailEstimate moment_root_x1(const std::vector<double>& samples, const MomentRootOptions& opts = {},
                                                 int blocks = 1) {
  if (samples.empty()) throw InvalidArgument("moment_root_x1: no samples");
  if (!(opts.p_max > 0.0)) throw InvalidArgument("moment_root_x1: p_max must be > 0");
  const auto logs = detail::logs_of(samples);
  const double p_small = 1e-3 * opts.p_max;
  TailEstimate e;
  e.method = TailMethod::MomentRoot;
  e.sample_size = samples.size();
  e.blocks = blocks;
  auto f = [](const std::vector<double>& l) {
    const double mx = *std::max_element(l.begin(), l.end());
    return [&l, mx](double p) { return log_moment(l, p, mx); };
  };
  const auto [ok, x] = detail::bracketed_root(f(logs), p_small, opts.p_max, opts.tolerance);
  if (!ok) {
    e.message = "no sign change of log m(p) on [" + std::to_string(p_small) + ", " + std::to_string(opts.p_max) +
                "]: log m(p_small) = " + std::to_string(log_moment(logs, p_small)) +
                ", log m(p_max) = " + std::to_string(log_moment(logs, opts.p_max));
    return e;
  }
  e.found = true;
  e.x1 = x;
  std::vector<double> boot;
  std::vector<double> res(logs.size());
  for (int r = 0; r < opts.bootstrap; ++r) {
    Rng rng(opts.seed, static_cast<std::uint64_t>(r));
    for (auto& v : res) v = logs[rng.index(logs.size())];
    const auto [okb, xb] = detail::bootstrap_root(f(res), x, p_small, opts.p_max);
    if (okb) boot.push_back(xb);
  }
  detail::set_ci(e, std::move(boot));
  return e;
}

/// p with E|Pi_{2m}|^p = E|Pi_m|^p, Pi_j a product of j i.i.d. copies of B.
/// log E|Pi_j|^p grows like j * Lambda(p) + c(p); the difference of the two
/// block sizes cancels c(p), so its root approaches the limiting index faster
/// than the single-block root.
[[nodiscard]] inline TailEstimate moment_increment_root(const std::vector<double>& samples_m,
                                                        const std::vector<double>& samples_2m,
                                                        const MomentRootOptions& opts = {}, int m = 1) {
  if (samples_m.empty() || samples_2m.empty()) throw InvalidArgument("moment_increment_root: no samples");
  const auto l1 = detail::logs_of(samples_m);
  const auto l2 = detail::logs_of(samples_2m);
  const double p_small = 1e-3 * opts.p_max;
  TailEstimate e;
  e.method = TailMethod::MomentIncrement;
  e.sample_size = samples_m.size() + samples_2m.size();
  e.blocks = m;
  auto g = [](const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = *std::max_element(a.begin(), a.end());
    const double mb = *std::max_element(b.begin(), b.end());
    return [&a, &b, ma, mb](double p) { return log_moment(b, p, mb) - log_moment(a, p, ma); };
  };
  const auto [ok, x] = detail::bracketed_root(g(l1, l2), p_small, opts.p_max, opts.tolerance);
  if (!ok) {
    e.message = "no sign change of the block increment on [" + std::to_string(p_small) + ", " +
                std::to_string(opts.p_max) + "]";
    return e;
  }
  e.found = true;
  e.x1 = x;
  std::vector<double> boot, r1(l1.size()), r2(l2.size());
  for (int r = 0; r < opts.bootstrap; ++r) {
    Rng rng(opts.seed, static_cast<std::uint64_t>(r));
    for (auto& v : r1) v = l1[rng.index(l1.size())];
    for (auto& v : r2) v = l2[rng.index(l2.size())];
    const auto [okb, xb] = detail::bootstrap_root(g(r1, r2), x, p_small, opts.p_max);
    if (okb) boot.push_back(xb);
  }
  detail::set_ci(e, std::move(boot));
  return e;
}

struct HillOptions {
  int bootstrap = 200;
  std::size_t block_length = 1;  // moving-block bootstrap; > 1 for dependent chain samples
  std::uint64_t seed = 13;
};

namespace detail {

// Hill estimate from the k + 1 largest values sorted in decreasing order.
inline double hill_from_top(const std::vector<double>& top_desc, std::size_t k) {
  const double ref = std::log(top_desc[k]);
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += std::log(top_desc[j]) - ref;
  return s > 0.0 ? static_cast<double>(k) / s : std::numeric_limits<double>::infinity();
}

inline std::vector<double> top_desc(std::vector<double> v, std::size_t count) {
  count = std::min(count, v.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(count - 1), v.end(), std::greater<>());
  v.resize(count);
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

// Light tails make the Hill estimate grow like log(n/k) as k shrinks; heavy
// tails keep it flat. Weighted slope of log xhat(k) against log log(n/k) over a
// geometric ladder k, k/2, ..., >= 10.
inline bool light_tail_signature(const std::vector<double>& top, std::size_t n, std::size_t k) {
  std::vector<double> xs, ys, ws;
  for (std::size_t kk = k; kk >= 10; kk /= 2) {
    const double h = hill_from_top(top, kk);
    if (!std::isfinite(h)) return false;
    xs.push_back(std::log(std::log(static_cast<double>(n) / static_cast<double>(kk))));
    ys.push_back(std::log(h));
    ws.push_back(static_cast<double>(kk));
  }
  if (xs.size() < 3) return false;
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += ws[i];
    sx += ws[i] * xs[i];
    sy += ws[i] * ys[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += ws[i] * (xs[i] - mx) * (ys[i] - my);
    sxx += ws[i] * (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0.0 && sxy / sxx > 0.5;
}

}  // namespace detail

/// Hill estimator k / sum_{j<k} log(Y_(j) / Y_(k)) on the k largest values
/// (0-based order statistics in decreasing order). Refuses k > 10% of the
/// sample and a vanishing denominator.
[[nodiscard]] inline TailEstimate hill_tail_index(const std::vector<double>& samples, std::size_t k,
                                                  const HillOptions& opts = {}) {
  const std::size_t n = samples.size();
  if (k < 2) throw InvalidArgument("hill_tail_index: k must be >= 2");
  if (10 * k > n) throw InvalidArgument("hill_tail_index: k exceeds 10% of the sample");
  for (double s : samples) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("hill_tail_index: samples must be positive and finite");
  }
  const auto top = detail::top_desc(samples, k + 1);
  const double x = detail::hill_from_top(top, k);
  if (!std::isfinite(x)) throw InvalidArgument("hill_tail_index: top order statistics are tied (zero denominator)");
  TailEstimate e;
  e.method = TailMethod::Hill;
  e.x1 = x;
  e.found = true;
  e.sample_size = n;
  e.light_tail_flag = detail::light_tail_signature(top, n, k);
  if (e.light_tail_flag) e.message = "Hill estimate drifts upward as k shrinks: light-tail signature";
  const std::size_t L = std::max<std::size_t>(1, std::min(opts.block_length, n));
  // Only values above the 4(k+1)-th largest can reach the top k+1 of a resample
  // that has at least k+1 of them, so the rest need not be kept.
  const double floor_value = detail::top_desc(samples, std::min(n, 4 * (k + 1))).back();
  std::vector<double> boot, res;
  for (int r = 0; r < opts.bootstrap; ++r) {
    Rng rng(opts.seed, static_cast<std::uint64_t>(r));
    res.clear();
    for (std::size_t filled = 0; filled < n;) {
      const std::size_t start = rng.index(n - L + 1);
      for (std::size_t j = 0; j < L && filled < n; ++j, ++filled) {
        const double v = samples[start + j];
        if (v >= floor_value) res.push_back(v);
      }
    }
    if (res.size() < k + 1) continue;  // too few extremes drawn; skip the replicate
    const double xb = detail::hill_from_top(detail::top_desc(res, k + 1), k);
    if (std::isfinite(xb)) boot.push_back(xb);
  }
  detail::set_ci(e, std::move(boot));
  return e;
}

/// (k, Hill estimate) over the given k values, for the stability plot.
[[nodiscard]] inline std::vector<std::pair<std::size_t, double>> hill_stability(const std::vector<double>& samples,
                                                                                const std::vector<std::size_t>& ks) {
  std::size_t kmax = 0;
  for (auto k : ks) kmax = std::max(kmax, k);
  if (kmax + 1 > samples.size()) throw InvalidArgument("hill_stability: k larger than the sample");
  const auto top = detail::top_desc(samples, kmax + 1);
  std::vector<std::pair<std::size_t, double>> out;
  for (auto k : ks) {
    if (k >= 1) out.emplace_back(k, detail::hill_from_top(top, k));
  }
  return out;
}

struct BoundedSupportOptions {
  double epsilon = 1e-6;
  double tau_quantile = 0.5;  // tau_min for the a-priori radius
  HurwitzEnvelope envelope{};  // C = 1, eta = 0 means: estimate from the system
  bool estimate_envelope = true;
};

struct Checkpoint {
  std::int64_t step = 0;
  double running_max = 0.0;
};

struct BoundedSupportReport {
  std::vector<Checkpoint> checkpoints;
  double increase_second_half = 0.0;
  bool bounded = false;
  std::string verdict;
  double apriori_radius = std::numeric_limits<double>::quiet_NaN();  // heuristic
};

/// Running max of |Y_n| at geometric checkpoints over `steps` chain steps from
/// Y_0 = b0. Verdict "bounded" when the max grows by less than epsilon over the
/// second half of the run.
[[nodiscard]] inline BoundedSupportReport bounded_support_probe(const DecenteredSystem& sys, std::int64_t steps,
                                                                int checkpoints, std::uint64_t seed,
                                                                const BoundedSupportOptions& opts = {}) {
  if (steps < 2) throw InvalidArgument("bounded_support_probe: need >= 2 steps");
  if (checkpoints < 2) throw InvalidArgument("bounded_support_probe: need >= 2 checkpoints");
  std::vector<std::int64_t> marks;
  for (int j = 0; j < checkpoints; ++j) {
    const double f = std::pow(static_cast<double>(steps), static_cast<double>(j + 1) / checkpoints);
    const auto s = std::max<std::int64_t>(1, std::llround(f));
    if (marks.empty() || s > marks.back()) marks.push_back(s);
  }
  marks.back() = steps;
  const std::int64_t half = steps / 2;
  if (std::find(marks.begin(), marks.end(), half) == marks.end()) {
    marks.insert(std::upper_bound(marks.begin(), marks.end(), half), half);
  }
  Rng rng(seed, 0);
  Eigen::VectorXd y = sys.b(kMode0);
  double mx = y.norm();
  double at_half = mx;
  BoundedSupportReport rep;
  std::size_t next = 0;
  for (std::int64_t n = 1; n <= steps; ++n) {
    const double tau = rng.exponential(sys.rate(kMode0));
    const double tau1 = rng.exponential(sys.rate(kMode1));
    y = sys.affine_flow(sys.affine_flow(y, tau, kMode0), tau1, kMode1);
    mx = std::max(mx, y.norm());
    if (n == half) at_half = mx;
    if (next < marks.size() && n == marks[next]) {
      rep.checkpoints.push_back({n, mx});
      ++next;
    }
  }
  rep.increase_second_half = mx - at_half;
  rep.bounded = rep.increase_second_half < opts.epsilon;
  rep.verdict = rep.bounded ? "bounded" : "unbounded-support evidence";

  const HurwitzEnvelope env = opts.estimate_envelope ? hurwitz_envelope(sys) : opts.envelope;
  const double tau_min = -std::log(1.0 - opts.tau_quantile) / std::max(sys.rate(kMode0), sys.rate(kMode1));
  const double contraction = env.C * std::exp(-env.eta * tau_min);
  if (contraction < 1.0) {
    const auto& b0 = sys.b(kMode0);
    const auto& b1 = sys.b(kMode1);
    rep.apriori_radius = env.C * (b0.norm() + b1.norm() + (b0 - b1).norm()) / (1.0 - contraction);
  }
  return rep;
}

[[nodiscard]] inline ContractionReport coupling_contraction_check(const DecenteredSystem& sys,
                                                                  const HurwitzEnvelope& env, double pexp, double t,
                                                                  int replicas, std::uint64_t seed,
                                                                  Mode i0 = kMode0) {
  return coupling_contraction_check(sys.A(kMode0), sys.A(kMode1), sys.rate(kMode0), sys.rate(kMode1), env, pexp, t,
                                    replicas, seed, i0);
}

}  // namespace switchlab
