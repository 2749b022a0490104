#pragma once

// Periodic deterministic switching: one-period product, its spectrum, and the
// growth exponent chi^d. Also a grid search for explosive alternating controls.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "switchlab/core.hpp"
#include "switchlab/errors.hpp"
#include "switchlab/flow.hpp"
#include "switchlab/parallel.hpp"
#include "switchlab/rng.hpp"

namespace switchlab {

struct PeriodicControl {
  double tau0 = 0.0;
  double tau1 = 0.0;
  [[nodiscard]] double period() const { return tau0 + tau1; }
};

[[nodiscard]] inline PeriodicControl periodic_control(const SystemParams& p) {
  return {1.0 / p.lambda0(), 1.0 / p.lambda1()};
}

enum class SpectralRegime { RealSplit, ComplexPair, DegenerateRepeated };

[[nodiscard]] inline std::string_view to_string(SpectralRegime r) {
  switch (r) {
    case SpectralRegime::RealSplit: return "real-split";
    case SpectralRegime::ComplexPair: return "complex-pair";
    case SpectralRegime::DegenerateRepeated: return "degenerate-repeated";
  }
  return "unknown";
}

struct SpectralReport {
  PeriodicControl control;
  Matrix2 product;                               // B1(tau1) B0(tau0)
  std::array<std::complex<double>, 2> eigenvalues;  // |first| >= |second|
  double spectral_radius = 0.0;
  double chi_d = 0.0;
  SpectralRegime regime = SpectralRegime::RealSplit;
};

namespace detail {

// Discriminant of X^2 - T X + D, factored for D = 1 where it matters most.
inline double product_discriminant(double T, double D) {
  if (D == 1.0) return (T - 2.0) * (T + 2.0);
  return T * T - 4.0 * D;
}

inline SpectralRegime classify(double disc, double T) {
  const double scale = std::max(1.0, T * T);
  if (std::abs(disc) <= 64.0 * std::numeric_limits<double>::epsilon() * scale) {
    return SpectralRegime::DegenerateRepeated;
  }
  return disc > 0.0 ? SpectralRegime::RealSplit : SpectralRegime::ComplexPair;
}

}  // namespace detail

/// chi^d = -a + log rho(P) / period with P = B1(tau1) B0(tau0). The order B0 B1
/// is similar to this one (conjugation by B0), so the spectrum is the same.
[[nodiscard]] inline SpectralReport periodic_chi(const SystemParams& p) {
  SpectralReport rep;
  rep.control = periodic_control(p);
  rep.product = rotation_part(rep.control.tau1, kMode1, p) * rotation_part(rep.control.tau0, kMode0, p);
  const double T = rep.product.trace();
  const double D = rep.product.det();
  const double disc = detail::product_discriminant(T, D);
  rep.regime = detail::classify(disc, T);
  double log_rho = 0.0;
  switch (rep.regime) {
    case SpectralRegime::RealSplit: {
      const double l1 = 0.5 * (T + std::copysign(std::sqrt(disc), T));
      const double l2 = D / l1;
      rep.eigenvalues = {std::complex<double>(l1, 0.0), std::complex<double>(l2, 0.0)};
      log_rho = std::log(std::abs(l1));
      break;
    }
    case SpectralRegime::ComplexPair: {
      const double im = 0.5 * std::sqrt(-disc);
      rep.eigenvalues = {std::complex<double>(0.5 * T, im), std::complex<double>(0.5 * T, -im)};
      // both factors have unit determinant, so |lambda| = 1; log(D) would only add rounding
      log_rho = 0.0;
      break;
    }
    case SpectralRegime::DegenerateRepeated:
      rep.eigenvalues = {std::complex<double>(0.5 * T, 0.0), std::complex<double>(0.5 * T, 0.0)};
      log_rho = std::log(std::abs(0.5 * T));
      break;
  }
  rep.spectral_radius = std::exp(log_rho);
  rep.chi_d = -p.a + log_rho / rep.control.period();
  return rep;
}

struct CharPoly {
  std::array<double, 3> coefficients{};  // X^2 + c1 X + c0 as (1, c1, c0)
  double discriminant = 0.0;
  SpectralRegime regime = SpectralRegime::RealSplit;
};

/// Characteristic polynomial of B0(tau) B1(tau) for equal sojourns tau:
/// X^2 + (4 C^2 sin^2 tau - 2) X + 1 with C = (b + 1/b)/2. Its discriminant is
/// 16 C^2 sin^2 tau (C^2 sin^2 tau - 1), so the roots are real exactly when
/// C^2 sin^2 tau > 1.
[[nodiscard]] inline CharPoly char_poly_u_half(const SystemParams& p, double tau) {
  const double C = 0.5 * (p.b + 1.0 / p.b);
  const double s2 = std::sin(tau) * std::sin(tau);
  const double cs = C * C * s2;
  CharPoly cp;
  cp.coefficients = {1.0, 4.0 * cs - 2.0, 1.0};
  cp.discriminant = 16.0 * cs * (cs - 1.0);
  constexpr double snap = 64.0 * std::numeric_limits<double>::epsilon();
  if (cs <= snap || std::abs(cs - 1.0) <= snap) {  // sin(m pi) is only zero to rounding
    cp.regime = SpectralRegime::DegenerateRepeated;
  } else {
    cp.regime = cs > 1.0 ? SpectralRegime::RealSplit : SpectralRegime::ComplexPair;
  }
  return cp;
}

/// Relative size below which the lambda1-component of x0 is treated as rounding
/// noise, i.e. x0 lies on the lambda2 eigenline.
inline constexpr double kEigenlineSnap = 64.0 * std::numeric_limits<double>::epsilon();

/// (1/(n period)) log(|P^n x0| / |x0|) - a, with P^n applied in closed form from
/// the eigendecomposition of P (Jordan form when repeated), so n may be huge.
/// In the real-split regime an x0 whose lambda1-coordinate is below
/// kEigenlineSnap relative to |x0| is projected onto the lambda2 eigenline and
/// returns -a + log|lambda2| / period.
[[nodiscard]] inline double chi_d_from_x0(const SystemParams& p, const Vec2& x0, std::int64_t periods) {
  if (periods < 1) throw InvalidArgument("chi_d_from_x0: periods must be >= 1");
  const double x0n = norm(x0);
  if (!(x0n > 0.0) || !std::isfinite(x0n)) throw InvalidArgument("chi_d_from_x0: x0 must be non-zero");
  const SpectralReport rep = periodic_chi(p);
  const Matrix2& P = rep.product;
  const double n = static_cast<double>(periods);
  double log_pn = 0.0;  // log |P^n x0|

  auto eigvec = [&](std::complex<double> l) {
    // columns of adj(P - l I); take the larger for stability
    const std::array<std::complex<double>, 2> u{P.m01, l - P.m00};
    const std::array<std::complex<double>, 2> w{l - P.m11, P.m10};
    const double nu = std::norm(u[0]) + std::norm(u[1]);
    const double nw = std::norm(w[0]) + std::norm(w[1]);
    return nu >= nw ? u : w;
  };

  switch (rep.regime) {
    case SpectralRegime::RealSplit: {
      const double l1 = rep.eigenvalues[0].real();
      const double l2 = rep.eigenvalues[1].real();
      const auto v1c = eigvec(l1);
      const auto v2c = eigvec(l2);
      const Vec2 v1{v1c[0].real(), v1c[1].real()};
      const Vec2 v2{v2c[0].real(), v2c[1].real()};
      const double det = v1[0] * v2[1] - v1[1] * v2[0];
      double c1 = (x0[0] * v2[1] - x0[1] * v2[0]) / det;
      const double c2 = (v1[0] * x0[1] - v1[1] * x0[0]) / det;
      if (std::abs(c1) * norm(v1) <= kEigenlineSnap * x0n) c1 = 0.0;
      if (c1 == 0.0) {
        log_pn = n * std::log(std::abs(l2)) + std::log(std::abs(c2) * norm(v2));
      } else {
        // P^n x0 / |l1|^n = c1 s1^n v1 + c2 s2^n (|l2|/|l1|)^n v2
        const double s1 = (l1 < 0.0 && (periods % 2)) ? -1.0 : 1.0;
        const double s2 = (l2 < 0.0 && (periods % 2)) ? -1.0 : 1.0;
        const double r = std::exp(n * (std::log(std::abs(l2)) - std::log(std::abs(l1))));
        const Vec2 y{c1 * s1 * v1[0] + c2 * s2 * r * v2[0], c1 * s1 * v1[1] + c2 * s2 * r * v2[1]};
        log_pn = n * std::log(std::abs(l1)) + std::log(norm(y));
      }
      break;
    }
    case SpectralRegime::ComplexPair: {
      // x0 = 2 Re(c v) with v the eigenvector of l; P^n x0 = 2 Re(c l^n v)
      const std::complex<double> l = rep.eigenvalues[0];
      const auto v = eigvec(l);
      // solve x0 = c v + conj(c v) for complex c: x0 = 2 (Re c Re v - Im c Im v)
      const double a11 = 2.0 * v[0].real(), a12 = -2.0 * v[0].imag();
      const double a21 = 2.0 * v[1].real(), a22 = -2.0 * v[1].imag();
      const double dd = a11 * a22 - a12 * a21;
      const std::complex<double> c((x0[0] * a22 - a12 * x0[1]) / dd, (a11 * x0[1] - a21 * x0[0]) / dd);
      const double phase = std::fmod(n * std::arg(l), 2.0 * kPi);
      const std::complex<double> z = c * std::polar(1.0, phase);
      const Vec2 y{2.0 * (z * v[0]).real(), 2.0 * (z * v[1]).real()};
      log_pn = n * std::log(std::abs(l)) + std::log(norm(y));
      break;
    }
    case SpectralRegime::DegenerateRepeated: {
      // P = l I + N with N^2 = 0: P^n x0 = l^{n-1} (l x0 + n N x0)
      const double l = rep.eigenvalues[0].real();
      const Vec2 Nx{(P.m00 - l) * x0[0] + P.m01 * x0[1], P.m10 * x0[0] + (P.m11 - l) * x0[1]};
      const Vec2 y{l * x0[0] + n * Nx[0], l * x0[1] + n * Nx[1]};
      log_pn = (n - 1.0) * std::log(std::abs(l)) + std::log(norm(y));
      break;
    }
  }
  return (log_pn - std::log(x0n)) / (n * rep.control.period()) - p.a;
}

struct PowerIteration {
  double average_rate = 0.0;      // (1/(n period)) log |P^n x0|/|x0| - a
  double last_period_rate = 0.0;  // (1/period) log |P^n x0|/|P^{n-1} x0| - a
};

/// Renormalised direct iteration of the one-period map. The average rate carries
/// an O(1/n) offset from the start vector; the last-period rate converges
/// geometrically at rate |lambda2/lambda1|^2 in the real-split regime.
[[nodiscard]] inline PowerIteration chi_d_power_iteration(const SystemParams& p, const Vec2& x0,
                                                          std::int64_t periods) {
  if (periods < 1) throw InvalidArgument("chi_d_power_iteration: periods must be >= 1");
  const double x0n = norm(x0);
  if (!(x0n > 0.0)) throw InvalidArgument("chi_d_power_iteration: x0 must be non-zero");
  const SpectralReport rep = periodic_chi(p);
  Vec2 y{x0[0] / x0n, x0[1] / x0n};
  double acc = 0.0, last = 0.0;
  for (std::int64_t k = 0; k < periods; ++k) {
    y = rep.product.apply(y);
    const double g = norm(y);
    last = std::log(g);
    acc += last;
    y = {y[0] / g, y[1] / g};
  }
  const double per = rep.control.period();
  return {acc / (static_cast<double>(periods) * per) - p.a, last / per - p.a};
}

/// Singular values and spectral radius of one alternating cycle.
struct CycleGain {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double spectral_radius = 0.0;
  double total_time = 0.0;
  /// log(spectral radius) / total time: the periodic growth rate of this cycle
  [[nodiscard]] double growth_rate() const { return std::log(spectral_radius) / total_time; }
};

/// Product e^{t_k A_{I_k}} ... e^{t_0 A_{I_0}} with I_j alternating from `start`.
[[nodiscard]] inline Eigen::MatrixXd cycle_product(const Eigen::MatrixXd& A0, const Eigen::MatrixXd& A1,
                                                   const std::vector<double>& durations, Mode start) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(A0.rows(), A0.cols());
  Mode m = start;
  for (double t : durations) {
    M = general_matrix_exp(m.value() == 0 ? A0 : A1, t) * M;
    m = m.flip();
  }
  return M;
}

[[nodiscard]] inline CycleGain cycle_gain(const Eigen::MatrixXd& M, double total_time) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  CycleGain g;
  g.sigma_max = s(0);
  g.sigma_min = s(s.size() - 1);
  const Eigen::VectorXcd ev = M.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) g.spectral_radius = std::max(g.spectral_radius, std::abs(ev[i]));
  g.total_time = total_time;
  return g;
}

struct ExplosiveSearchOptions {
  int x_grid = 181;          // directions tested for the minimax certificate
  std::uint64_t seed = 1;    // direction sampling for d > 3
  unsigned workers = 1;
};

struct ExplosiveControl {
  // best single schedule by sigma_min
  std::vector<double> durations;
  int start_mode = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double spectral_radius = 0.0;
  bool sigma_certified = false;  // sigma_min > 1: one schedule grows every x
  // min over tested directions x of max over schedules of |M x| / |x|
  double minimax_gain = 0.0;
  std::vector<double> worst_direction;
  bool minimax_certified = false;  // every tested x has a schedule with gain > 1
  std::size_t schedules = 0;
};

namespace detail {

inline std::vector<Eigen::VectorXd> sphere_directions(Eigen::Index d, int count, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(count));
  if (d == 2) {
    // x and -x have equal gain, so half a circle suffices
    for (int j = 0; j < count; ++j) {
      const double th = kPi * j / count;
      Eigen::VectorXd x(2);
      x << std::cos(th), std::sin(th);
      out.push_back(x);
    }
  } else if (d == 3) {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < count; ++j) {
      const double z = 1.0 - 2.0 * (j + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Eigen::VectorXd x(3);
      x << r * std::cos(golden * j), r * std::sin(golden * j), z;
      out.push_back(x);
    }
  } else {
    Rng rng(seed, 0x5eed);
    for (int j = 0; j < count; ++j) {
      Eigen::VectorXd x(d);
      for (Eigen::Index k = 0; k < d; ++k) x(k) = rng.normal();
      out.push_back(x.normalized());
    }
  }
  return out;
}

}  // namespace detail

/// Exhaustive search over alternating schedules (t_0..t_k), each t_j from
/// `grid`, starting in either mode. Two certificates are reported: sigma_min > 1
/// of a single schedule, and the minimax form where each tested direction may
/// pick its own schedule. For Hurwitz generators det e^{tA} = e^{t tr A} < 1, so
/// sigma_min < 1 always and only the minimax form can succeed.
[[nodiscard]] inline ExplosiveControl explosive_control_search(const Eigen::MatrixXd& A0, const Eigen::MatrixXd& A1,
                                                               int k_phases, const std::vector<double>& grid,
                                                               const ExplosiveSearchOptions& opts = {}) {
  if (grid.empty()) throw InvalidArgument("explosive_control_search: empty duration grid");
  if (k_phases < 1 || k_phases % 2 == 0) throw InvalidArgument("explosive_control_search: k must be odd");
  if (A0.rows() != A0.cols() || A0.rows() != A1.rows() || A1.rows() != A1.cols()) {
    throw DimensionMismatch("explosive_control_search: A0/A1 must be square of equal size");
  }
  for (double t : grid) {
    if (!(t > 0.0)) throw InvalidArgument("explosive_control_search: durations must be > 0");
  }
  const std::size_t g = grid.size();
  const std::size_t phases = static_cast<std::size_t>(k_phases) + 1;
  std::size_t per_start = 1;
  for (std::size_t j = 0; j < phases; ++j) {
    if (per_start > (std::size_t{1} << 40) / g) throw InvalidArgument("explosive_control_search: grid too large");
    per_start *= g;
  }
  const FlowOperator f0(A0), f1(A1);
  std::array<std::vector<Eigen::MatrixXd>, 2> exps;
  for (double t : grid) {
    exps[0].push_back(f0(t));
    exps[1].push_back(f1(t));
  }
  const auto dirs = detail::sphere_directions(A0.rows(), opts.x_grid, opts.seed);

  struct Partial {
    double sigma_min = -1.0, sigma_max = 0.0, rho = 0.0;
    std::size_t index = 0;
    std::vector<double> best_gain;  // per direction
  };
  const std::size_t total = 2 * per_start;
  const std::size_t chunks = std::min<std::size_t>(total, 64);
  auto parts = parallel_map(chunks, opts.workers, [&](std::size_t c) {
    Partial part;
    part.best_gain.assign(dirs.size(), 0.0);
    for (std::size_t idx = c; idx < total; idx += chunks) {
      const int start = static_cast<int>(idx / per_start);
      std::size_t code = idx % per_start;
      Eigen::MatrixXd M = Eigen::MatrixXd::Identity(A0.rows(), A0.cols());
      int mode = start;
      for (std::size_t j = 0; j < phases; ++j) {
        M = exps[mode][code % g] * M;
        code /= g;
        mode = 1 - mode;
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
      const auto& s = svd.singularValues();
      if (s(s.size() - 1) > part.sigma_min) {
        part.sigma_min = s(s.size() - 1);
        part.sigma_max = s(0);
        part.index = idx;
      }
      for (std::size_t j = 0; j < dirs.size(); ++j) {
        part.best_gain[j] = std::max(part.best_gain[j], (M * dirs[j]).norm());
      }
    }
    return part;
  });

  ExplosiveControl out;
  out.schedules = total;
  std::size_t best = 0;
  for (std::size_t c = 1; c < parts.size(); ++c) {
    if (parts[c].sigma_min > parts[best].sigma_min ||
        (parts[c].sigma_min == parts[best].sigma_min && parts[c].index < parts[best].index)) {
      best = c;
    }
  }
  const std::size_t idx = parts[best].index;
  out.start_mode = static_cast<int>(idx / per_start);
  std::size_t code = idx % per_start;
  for (std::size_t j = 0; j < phases; ++j) {
    out.durations.push_back(grid[code % g]);
    code /= g;
  }
  out.sigma_min = parts[best].sigma_min;
  out.sigma_max = parts[best].sigma_max;
  double tt = 0.0;
  for (double t : out.durations) tt += t;
  out.spectral_radius = cycle_gain(cycle_product(A0, A1, out.durations, Mode(out.start_mode)), tt).spectral_radius;
  out.sigma_certified = out.sigma_min > 1.0;

  out.minimax_gain = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    double gmax = 0.0;
    for (const auto& part : parts) gmax = std::max(gmax, part.best_gain[j]);
    if (gmax < out.minimax_gain) {
      out.minimax_gain = gmax;
      out.worst_direction.assign(dirs[j].data(), dirs[j].data() + dirs[j].size());
    }
  }
  out.minimax_certified = out.minimax_gain > 1.0;
  return out;
}

/// Uniform grid lo, lo + h, ..., hi with `count` points.
[[nodiscard]] inline std::vector<double> linear_grid(double lo, double hi, int count) {
  if (count < 2 || !(hi > lo)) throw InvalidArgument("linear_grid: need count >= 2 and hi > lo");
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
  return g;
}

/// Logarithmic grid with `count` points.
[[nodiscard]] inline std::vector<double> log_grid(double lo, double hi, int count) {
  if (count < 2 || !(lo > 0.0) || !(hi > lo)) throw InvalidArgument("log_grid: need count >= 2 and 0 < lo < hi");
  std::vector<double> g(static_cast<std::size_t>(count));
  const double l = std::log(lo), h = std::log(hi);
  for (int i = 0; i < count; ++i) g[i] = std::exp(l + (h - l) * i / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace switchlab
