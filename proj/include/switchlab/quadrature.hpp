#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "switchlab/errors.hpp"

namespace switchlab::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive 31-point Gauss-Kronrod on [lo, hi]. Throws NumericalFailure when the
/// error estimate exceeds both `abs_tol` and 10 * rel_tol * (L1 norm of f).
template <class F>
[[nodiscard]] Result adaptive(F&& f, double lo, double hi, double abs_tol = 1e-10,
                              double rel_tol = 1e-12, unsigned max_depth = 18) {
  if (lo == hi) return {};
  double err = 0.0;
  double l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, lo, hi, max_depth, rel_tol, &err, &l1);
  if (!std::isfinite(v)) {
    throw NumericalFailure("quadrature produced a non-finite value", err);
  }
  if (err > abs_tol && err > 10.0 * rel_tol * l1) {
    std::ostringstream msg;
    msg << "quadrature did not converge on [" << lo << ", " << hi << "]: achieved error " << err
        << " (requested " << abs_tol << ")";
    throw NumericalFailure(msg.str(), err);
  }
  return {v, err};
}

/// Fixed 10-point Gauss-Legendre rule.
template <class F>
[[nodiscard]] double gauss10(F&& f, double lo, double hi) {
  return boost::math::quadrature::gauss<double, 10>::integrate(f, lo, hi);
}

/// Nodes and weights of the 10-point Gauss-Legendre rule on [-1, 1].
struct GaussRule10 {
  std::array<double, 10> x{};
  std::array<double, 10> w{};

  GaussRule10() {
    using G = boost::math::quadrature::gauss<double, 10>;
    const auto& ax = G::abscissa();
    const auto& aw = G::weights();
    // boost stores the non-negative half; 10 points -> 5 pairs.
    for (std::size_t i = 0; i < 5; ++i) {
      x[2 * i] = -ax[i];
      x[2 * i + 1] = ax[i];
      w[2 * i] = aw[i];
      w[2 * i + 1] = aw[i];
    }
  }

  [[nodiscard]] static const GaussRule10& get() {
    static const GaussRule10 rule;
    return rule;
  }
};

}  // namespace switchlab::quad
