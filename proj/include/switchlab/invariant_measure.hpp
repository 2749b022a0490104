#pragma once

// Explicit invariant density of the angular process (Theta_t, I_t) and the
// Lyapunov exponent it yields.
//
// Notation used throughout: w(a) = e^{-beta v(a)} / d1(a) and
//   h(theta) = integral_theta^inf e^{-beta (v(a) - v(theta))} / d1(a) da,
// i.e. h = e^{beta v} * (tail of w). h is pi-periodic and strictly negative, and
// the normalised tail ratio g = h / h(0) carries all of the density:
//   Phi = K g,  rho0 = K g / d0,  rho1 = K (kappa - g) / d1,  C = kappa K.
// Working with h instead of e^{beta v} and the tail separately keeps every
// exponent non-positive, so nothing overflows at large beta.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "switchlab/core.hpp"
#include "switchlab/errors.hpp"
#include "switchlab/quadrature.hpp"

namespace switchlab {

enum class ChiMethod { Quadrature, MonteCarlo, Spectral, ErlangMonteCarlo };

[[nodiscard]] inline std::string_view to_string(ChiMethod m) {
  switch (m) {
    case ChiMethod::Quadrature: return "quadrature";
    case ChiMethod::MonteCarlo: return "monte-carlo";
    case ChiMethod::Spectral: return "spectral";
    case ChiMethod::ErlangMonteCarlo: return "erlang-mc";
  }
  return "unknown";
}

struct ChiResult {
  double value = 0.0;
  ChiMethod method = ChiMethod::Quadrature;
  double error = 0.0;
  SystemParams params{};
  std::vector<std::string> warnings;
};

struct MeasureConstants {
  double kappa = 0.0;
  double bigK = 0.0;
  double bigC = 0.0;
  double quadrature_tolerance = 0.0;
  bool normalization_fallback = false;  // K rescaled from total mass instead of the closed 1/K integral
};

/// F = integral_0^pi e^{-beta v}/d1 by adaptive Gauss-Kronrod. The full integral
/// over [0, inf) is F / (1 - e^{-beta pi}) since v(a + pi) = v(a) + pi.
[[nodiscard]] inline double half_period_integral(const SystemParams& p, double abs_tol = 1e-13) {
  auto w = [&](double a) { return std::exp(-p.beta * v_function(a, p)) / angular_drift(a, kMode1, p); };
  // split at pi/2 where d1 has its narrow feature for large b
  const auto lo = quad::adaptive(w, 0.0, 0.5 * kPi, abs_tol, 1e-13);
  const auto hi = quad::adaptive(w, 0.5 * kPi, kPi, abs_tol, 1e-13);
  return lo.value + hi.value;
}

[[nodiscard]] inline double full_integral_from_half(double half, const SystemParams& p) {
  return half / -std::expm1(-p.beta * kPi);
}

/// integral_theta^inf e^{-beta v}/d1 for theta in [0, 2pi), from the precomputed
/// half-period integral F and full integral I_inf.
[[nodiscard]] inline double tail_integral(double theta, const SystemParams& p, double /*half*/,
                                          double full, double abs_tol = 1e-13) {
  if (theta < 0.0) throw InvalidArgument("tail_integral: theta must be >= 0");
  const double top = kPi * std::ceil(theta / kPi);
  auto w = [&](double a) { return std::exp(-p.beta * v_function(a, p)) / angular_drift(a, kMode1, p); };
  double direct = 0.0;
  if (top > theta) direct = quad::adaptive(w, theta, top, abs_tol, 1e-13).value;
  return direct + std::exp(-p.beta * top) * full;
}

struct MeasureOptions {
  int min_panels = 256;
  double quadrature_tolerance = 1e-10;
  bool check_normalization = true;
};

/// Panel table of the two tails on [0, pi] plus everything derived from it.
///
/// h1 = h as above. Its companion h0 (same exponent, 1/d0 instead of 1/d1) obeys
///   1/(beta (1-u)) + h1 = -(u/(1-u)) h0,
/// so kappa - g = (u/(1-u)) h0 / h1(0) and rho1 is formed without cancellation.
class InvariantMeasure {
 public:
  explicit InvariantMeasure(const SystemParams& p, const MeasureOptions& opt = {})
      : p_(p), opt_(opt) {
    build_table();
    integrate_moments();
    if (opt_.check_normalization) check_normalization();
  }

  [[nodiscard]] const SystemParams& params() const { return p_; }
  [[nodiscard]] const MeasureConstants& constants() const { return constants_; }
  [[nodiscard]] std::size_t panels() const { return nodes_.size() - 1; }

  /// integral_0^inf e^{-beta v}/d1 (= h(0)).
  [[nodiscard]] double full_integral() const { return h0_; }
  /// integral_0^pi e^{-beta v}/d1 from the panel table.
  [[nodiscard]] double half_integral() const { return half_; }

  /// (h0, h1) at theta.
  [[nodiscard]] std::pair<double, double> tails(double theta) const {
    double r = theta - kPi * std::floor(theta / kPi);
    if (r >= kPi) r = 0.0;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
    std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - nodes_.begin() - 1));
    k = std::min(k, panels() - 1);
    return panel_tails(r, v_function(r, p_), k);
  }

  [[nodiscard]] double h(double theta) const { return tails(theta).second; }

  /// g(theta) = e^{beta v(theta)} tail(theta) / tail(0); pi-periodic, g(0) = 1.
  [[nodiscard]] double g(double theta) const { return h(theta) / h0_; }
  [[nodiscard]] double phi(double theta) const { return constants_.bigK * g(theta); }
  [[nodiscard]] std::pair<double, double> rho(double theta) const {
    const auto [t0, t1] = tails(theta);
    const double scale = constants_.bigK / h0_;
    return {scale * t1 / angular_drift(theta, kMode0, p_),
            scale * p_.u / (1.0 - p_.u) * t0 / angular_drift(theta, kMode1, p_)};
  }
  [[nodiscard]] double rho0(double theta) const { return rho(theta).first; }
  [[nodiscard]] double rho1(double theta) const { return rho(theta).second; }

  /// chi = -a + (b - 1/b)/2 * K * integral_0^{2pi} sin(2t)(1/d0 + 1/d1) g dt.
  [[nodiscard]] double chi_formula() const { return chi_formula_; }

  /// chi = integral of A(theta, i) against the invariant measure.
  [[nodiscard]] double chi_ergodic() const {
    auto f = [&](double t) {
      const auto [r0, r1] = rho(t);
      return radial_drift(t, kMode0, p_) * r0 + radial_drift(t, kMode1, p_) * r1;
    };
    return 2.0 * integrate_half_period(f);
  }

  /// Total mass by adaptive quadrature of the density evaluator.
  [[nodiscard]] double total_mass() const {
    auto f = [&](double t) {
      const auto [r0, r1] = rho(t);
      return r0 + r1;
    };
    return 2.0 * integrate_half_period(f);
  }

  // Integrands whose value cancels to round-off (residuals, degenerate b = 1)
  // never meet a pure relative test; the depth cap keeps them from bisecting
  // to the bottom while the absolute check in quad::adaptive still applies.
  static constexpr double kRelTol = 1e-12;
  static constexpr unsigned kMaxDepth = 12;

  /// Adaptive Gauss-Kronrod over [0, pi] split at pi/2.
  template <class F>
  [[nodiscard]] double integrate_half_period(F&& f) const {
    const double tol = 1e-10;
    return quad::adaptive(f, 0.0, 0.5 * kPi, tol, kRelTol, kMaxDepth).value +
           quad::adaptive(f, 0.5 * kPi, kPi, tol, kRelTol, kMaxDepth).value;
  }

  template <class F>
  [[nodiscard]] double integrate_full_period(F&& f) const {
    double s = 0.0;
    for (int q = 0; q < 4; ++q) {
      s += quad::adaptive(f, q * 0.5 * kPi, (q + 1) * 0.5 * kPi, 1e-10, kRelTol, kMaxDepth).value;
    }
    return s;
  }

 private:
  // Both tails of the panel containing r, vr = v(r).
  [[nodiscard]] std::pair<double, double> panel_tails(double r, double vr, std::size_t k) const {
    const double top = nodes_[k + 1];
    const auto& rule = quad::GaussRule10::get();
    const double half = 0.5 * (top - r);
    const double mid = 0.5 * (top + r);
    double s0 = 0.0, s1 = 0.0;
    if (half > 0.0) {
      for (std::size_t j = 0; j < rule.x.size(); ++j) {
        const double a = mid + half * rule.x[j];
        const double e = rule.w[j] * std::exp(-p_.beta * (v_function(a, p_) - vr));
        s0 += e / angular_drift(a, kMode0, p_);
        s1 += e / angular_drift(a, kMode1, p_);
      }
    }
    const double decay = std::exp(-p_.beta * (vnodes_[k + 1] - vr));
    return {half * s0 + decay * t0nodes_[k + 1], half * s1 + decay * t1nodes_[k + 1]};
  }

  void build_table() {
    const double vmax = std::max(p_.b, 1.0 / p_.b);
    const auto m = static_cast<std::size_t>(std::max<double>(
        {static_cast<double>(opt_.min_panels), std::ceil(kPi * p_.beta * vmax), std::ceil(40.0 * vmax)}));
    nodes_.resize(m + 1);
    vnodes_.resize(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
      nodes_[k] = kPi * static_cast<double>(k) / static_cast<double>(m);
      vnodes_[k] = v_function(nodes_[k], p_);
    }
    nodes_[m] = kPi;
    vnodes_[m] = kPi;

    // tail_k = p_k + e_k tail_{k+1}, closed by tail_m = tail_0: carry tail_k = P_k + E_k tail_0.
    std::vector<double> p0(m + 1, 0.0), p1(m + 1, 0.0), ek(m + 1, 1.0);
    const auto& rule = quad::GaussRule10::get();
    for (std::size_t k = m; k-- > 0;) {
      const double half = 0.5 * (nodes_[k + 1] - nodes_[k]);
      const double mid = 0.5 * (nodes_[k + 1] + nodes_[k]);
      double s0 = 0.0, s1 = 0.0;
      for (std::size_t j = 0; j < rule.x.size(); ++j) {
        const double a = mid + half * rule.x[j];
        const double e = rule.w[j] * std::exp(-p_.beta * (v_function(a, p_) - vnodes_[k]));
        s0 += e / angular_drift(a, kMode0, p_);
        s1 += e / angular_drift(a, kMode1, p_);
      }
      const double e = std::exp(-p_.beta * (vnodes_[k + 1] - vnodes_[k]));
      p0[k] = half * s0 + e * p0[k + 1];
      p1[k] = half * s1 + e * p1[k + 1];
      ek[k] = e * ek[k + 1];
    }
    const double closing = -std::expm1(-p_.beta * kPi);
    half_ = p1[0];
    h0_ = p1[0] / closing;
    const double h0_mode0 = p0[0] / closing;
    t0nodes_.resize(m + 1);
    t1nodes_.resize(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
      t0nodes_[k] = p0[k] + ek[k] * h0_mode0;
      t1nodes_[k] = p1[k] + ek[k] * h0_;
    }
    t0nodes_[m] = h0_mode0;
    t1nodes_[m] = h0_;
    if (!(h0_ < 0.0) || !std::isfinite(h0_)) {
      throw Inconsistency("invariant measure: tail integral must be finite and negative");
    }
  }

  // One pass over the panels accumulating the integrals that fix K and chi.
  void integrate_moments() {
    const auto& rule = quad::GaussRule10::get();
    const double ratio = p_.u / (1.0 - p_.u);
    double mass_int = 0.0;  // integral_0^pi (rho0 + rho1) / K
    double chi_int = 0.0;   // integral_0^pi sin 2t (1/d0 + 1/d1) g
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
      const double half = 0.5 * (nodes_[k + 1] - nodes_[k]);
      const double mid = 0.5 * (nodes_[k + 1] + nodes_[k]);
      double sm = 0.0, sc = 0.0;
      for (std::size_t j = 0; j < rule.x.size(); ++j) {
        const double t = mid + half * rule.x[j];
        const auto [t0, t1] = panel_tails(t, v_function(t, p_), k);
        const double gv = t1 / h0_;
        const double id0 = 1.0 / angular_drift(t, kMode0, p_);
        const double id1 = 1.0 / angular_drift(t, kMode1, p_);
        sm += rule.w[j] * (gv * id0 + ratio * t0 / h0_ * id1);
        sc += rule.w[j] * std::sin(2.0 * t) * (id0 + id1) * gv;
      }
      mass_int += half * sm;
      chi_int += half * sc;
    }
    MeasureConstants c;
    c.kappa = 1.0 / (-p_.beta * (1.0 - p_.u) * h0_);
    c.bigK = 1.0 / (2.0 * mass_int);
    c.bigC = c.kappa * c.bigK;
    c.quadrature_tolerance = opt_.quadrature_tolerance;
    if (!(c.bigC < 0.0) || !(c.bigK < 0.0) || !std::isfinite(c.bigK)) {
      throw Inconsistency("invariant measure: constants K and C must be negative");
    }
    constants_ = c;
    chi_formula_ = -p_.a + 0.5 * (p_.b - 1.0 / p_.b) * c.bigK * 2.0 * chi_int;
  }

  void check_normalization() {
    const double mass = total_mass();
    if (std::abs(mass - 1.0) > 1e-8) {
      constants_.bigK /= mass;
      constants_.bigC = constants_.kappa * constants_.bigK;
      constants_.normalization_fallback = true;
      chi_formula_ = -p_.a + (chi_formula_ + p_.a) / mass;
    }
  }

  SystemParams p_;
  MeasureOptions opt_;
  std::vector<double> nodes_;
  std::vector<double> vnodes_;
  std::vector<double> t0nodes_;
  std::vector<double> t1nodes_;
  double half_ = 0.0;
  double h0_ = 0.0;
  MeasureConstants constants_{};
  double chi_formula_ = 0.0;
};

/// 1/K from the closed integral
///   1/K = integral_0^{2pi} [ g (1/d0 - 1/d1) + kappa / d1 ] dtheta,
/// evaluated independently of the cancellation-free form used inside InvariantMeasure.
[[nodiscard]] inline double inverse_k_closed_form(const InvariantMeasure& m) {
  const auto& p = m.params();
  const double kappa = m.constants().kappa;
  auto f = [&](double t) {
    return m.g(t) * (1.0 / angular_drift(t, kMode0, p) - 1.0 / angular_drift(t, kMode1, p)) +
           kappa / angular_drift(t, kMode1, p);
  };
  return m.integrate_full_period(f);
}

[[nodiscard]] inline MeasureConstants compute_constants(const SystemParams& p) {
  return InvariantMeasure(p).constants();
}

/// Densities on a uniform grid of [0, 2pi) plus the exact evaluator.
class DensityPair {
 public:
  static constexpr std::size_t kDefaultGrid = 4096;

  DensityPair(std::shared_ptr<const InvariantMeasure> m, std::size_t grid = kDefaultGrid)
      : measure_(std::move(m)) {
    theta_.resize(grid);
    rho0_.resize(grid);
    rho1_.resize(grid);
    for (std::size_t i = 0; i < grid; ++i) {
      theta_[i] = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(grid);
      std::tie(rho0_[i], rho1_[i]) = measure_->rho(theta_[i]);
    }
  }

  [[nodiscard]] double rho0(double theta) const { return measure_->rho0(theta); }
  [[nodiscard]] double rho1(double theta) const { return measure_->rho1(theta); }
  [[nodiscard]] const std::vector<double>& grid() const { return theta_; }
  [[nodiscard]] const std::vector<double>& rho0_grid() const { return rho0_; }
  [[nodiscard]] const std::vector<double>& rho1_grid() const { return rho1_; }
  [[nodiscard]] const InvariantMeasure& measure() const { return *measure_; }

 private:
  std::shared_ptr<const InvariantMeasure> measure_;
  std::vector<double> theta_, rho0_, rho1_;
};

/// Builds the density pair. The constants must be the ones of `p`.
[[nodiscard]] inline DensityPair density_pair(const SystemParams& p, const MeasureConstants& c,
                                              std::size_t grid = DensityPair::kDefaultGrid) {
  auto m = std::make_shared<const InvariantMeasure>(p);
  if (std::abs(m->constants().bigK - c.bigK) > 1e-9 * std::abs(c.bigK)) {
    throw InvalidArgument("density_pair: constants do not belong to these parameters");
  }
  DensityPair pair(std::move(m), grid);
  for (std::size_t i = 0; i < pair.grid().size(); ++i) {
    if (pair.rho0_grid()[i] < -1e-12 || pair.rho1_grid()[i] < -1e-12) {
      throw Inconsistency("density_pair: negative density on the evaluation grid");
    }
  }
  return pair;
}

/// Lyapunov exponent from the closed-form measure. Both the explicit formula and
/// the ergodic average of the radial drift are evaluated and must agree.
[[nodiscard]] inline ChiResult lyapunov_chi(const SystemParams& p, double route_tolerance = 1e-6,
                                            bool cross_check = true) {
  const InvariantMeasure m(p, MeasureOptions{.check_normalization = cross_check});
  ChiResult r;
  r.value = m.chi_formula();
  r.method = ChiMethod::Quadrature;
  r.params = p;
  r.error = m.constants().quadrature_tolerance;
  if (cross_check) {
    const double other = m.chi_ergodic();
    const double gap = std::abs(other - r.value);
    if (gap > route_tolerance) {
      throw Inconsistency("lyapunov_chi: formula and ergodic routes disagree by " + std::to_string(gap));
    }
    r.error = std::max(r.error, gap);
  }
  return r;
}

/// max over f in {cos k theta, sin k theta on one mode, 0 on the other}, k <= order,
/// of |integral L f dmu|, with L f = d_i f' + lambda_i (f(., 1-i) - f(., i)).
[[nodiscard]] inline double stationarity_residual(const InvariantMeasure& m, int fourier_order) {
  const auto& p = m.params();
  const double lam[2] = {p.lambda0(), p.lambda1()};
  double worst = 0.0;
  for (int mode = 0; mode < 2; ++mode) {
    const Mode mi(mode);
    for (int k = 0; k <= fourier_order; ++k) {
      for (int kind = 0; kind < 2; ++kind) {
        if (k == 0 && kind == 1) continue;
        auto f = [&](double t) { return kind == 0 ? std::cos(k * t) : std::sin(k * t); };
        auto df = [&](double t) { return kind == 0 ? -k * std::sin(k * t) : k * std::cos(k * t); };
        auto integrand = [&](double t) {
          const auto [r0, r1] = m.rho(t);
          const double own = mode == 0 ? r0 : r1;
          const double other = mode == 0 ? r1 : r0;
          return angular_drift(t, mi, p) * df(t) * own - lam[mode] * f(t) * own + lam[1 - mode] * f(t) * other;
        };
        worst = std::max(worst, std::abs(m.integrate_full_period(integrand)));
      }
    }
  }
  return worst;
}

[[nodiscard]] inline double stationarity_residual(const SystemParams& p, int fourier_order) {
  return stationarity_residual(InvariantMeasure(p), fourier_order);
}

struct FgDecomposition {
  double f_integral_numeric = 0.0;  // integral_0^{pi/2} f
  double f_integral_closed = 0.0;   // closed form in gamma
  double gamma = 0.0;
  std::vector<double> theta;
  std::vector<double> g;
};

/// f(theta) = (b - 1/b) sin(2 theta)(1/d0 + 1/d1).
[[nodiscard]] inline double shear_weight(double theta, const SystemParams& p) {
  return (p.b - 1.0 / p.b) * std::sin(2.0 * theta) *
         (1.0 / angular_drift(theta, kMode0, p) + 1.0 / angular_drift(theta, kMode1, p));
}

/// integral_0^{pi/2} f in closed form, (2/gamma) (b^2 - b^-2)/(b - 1/b)^2 log|(gamma-1)/(gamma+1)|
/// with gamma = sqrt(1 + 4/(b - 1/b)^2). This equals -4 log b.
[[nodiscard]] inline double shear_weight_closed_integral(const SystemParams& p) {
  const double s = p.b - 1.0 / p.b;
  const double gamma = std::sqrt(1.0 + 4.0 / (s * s));
  return 2.0 / gamma * (p.b * p.b - 1.0 / (p.b * p.b)) / (s * s) *
         std::log(std::abs((gamma - 1.0) / (gamma + 1.0)));
}

[[nodiscard]] inline FgDecomposition theorem31_fg_decomposition(const SystemParams& p, std::size_t grid = 257) {
  FgDecomposition out;
  auto f = [&](double t) { return shear_weight(t, p); };
  out.f_integral_numeric = quad::adaptive(f, 0.0, 0.5 * kPi, 1e-13, 1e-14).value;
  out.f_integral_closed = shear_weight_closed_integral(p);
  const double s = p.b - 1.0 / p.b;
  out.gamma = std::sqrt(1.0 + 4.0 / (s * s));
  const InvariantMeasure m(p, MeasureOptions{.check_normalization = false});
  out.theta.resize(grid);
  out.g.resize(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    out.theta[i] = kPi * static_cast<double>(i) / static_cast<double>(grid - 1);
    out.g[i] = m.g(out.theta[i]);
  }
  return out;
}

}  // namespace switchlab
