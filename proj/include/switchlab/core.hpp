#pragma once

// Planar switched pair A0/A1, the scalar coefficient functions of the angular
// and radial processes, and exact flows.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "switchlab/errors.hpp"

namespace switchlab {

inline constexpr double kPi = std::numbers::pi;

struct SystemParams {
  double a = 0.15;     // damping
  double b = 3.0;      // shear
  double beta = 1.0;   // total switching intensity
  double u = 0.5;      // rate-mixing fraction
  bool degenerate = false;  // admits b == 1 (and 0 < b < 1) for trivial-case checks

  [[nodiscard]] double lambda0() const { return beta * u; }
  [[nodiscard]] double lambda1() const { return beta * (1.0 - u); }
};

/// Validates and returns the parameter set. b > 1 is the working assumption;
/// b in (0, 1] is accepted only with `degenerate` set.
[[nodiscard]] inline SystemParams make_params(double a, double b, double beta, double u,
                                              bool degenerate = false) {
  if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(beta) && std::isfinite(u))) {
    throw InvalidArgument("system parameters must be finite");
  }
  if (!(a > 0.0)) throw InvalidArgument("a must be > 0");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be > 0");
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("u must lie in (0, 1)");
  if (!(b > 0.0)) throw InvalidArgument("b must be > 0");
  if (!(b > 1.0) && !degenerate) {
    throw InvalidArgument("b must be > 1 (b <= 1 requires the degenerate flag)");
  }
  return SystemParams{a, b, beta, u, degenerate};
}

class Mode {
 public:
  constexpr Mode() = default;
  constexpr explicit Mode(int v) : value_(v != 0 ? 1 : 0) {}
  [[nodiscard]] constexpr int value() const { return value_; }
  [[nodiscard]] constexpr Mode flip() const { return Mode(1 - value_); }
  friend constexpr bool operator==(Mode, Mode) = default;

 private:
  int value_ = 0;
};

inline constexpr Mode kMode0{0};
inline constexpr Mode kMode1{1};

using Vec2 = std::array<double, 2>;

struct Matrix2 {
  // row-major: [[m00, m01], [m10, m11]]
  double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;

  [[nodiscard]] static constexpr Matrix2 identity() { return {}; }
  [[nodiscard]] constexpr double trace() const { return m00 + m11; }
  [[nodiscard]] constexpr double det() const { return m00 * m11 - m01 * m10; }
  [[nodiscard]] bool finite() const {
    return std::isfinite(m00) && std::isfinite(m01) && std::isfinite(m10) && std::isfinite(m11);
  }
  [[nodiscard]] constexpr Vec2 apply(const Vec2& x) const {
    return {m00 * x[0] + m01 * x[1], m10 * x[0] + m11 * x[1]};
  }
  [[nodiscard]] Eigen::Matrix2d to_eigen() const {
    Eigen::Matrix2d m;
    m << m00, m01, m10, m11;
    return m;
  }
  friend constexpr Matrix2 operator*(const Matrix2& l, const Matrix2& r) {
    return {l.m00 * r.m00 + l.m01 * r.m10, l.m00 * r.m01 + l.m01 * r.m11,
            l.m10 * r.m00 + l.m11 * r.m10, l.m10 * r.m01 + l.m11 * r.m11};
  }
  friend constexpr Matrix2 operator*(double s, const Matrix2& m) {
    return {s * m.m00, s * m.m01, s * m.m10, s * m.m11};
  }
};

/// Spectral (operator 2-) norm of a 2x2 matrix, closed form.
[[nodiscard]] inline double spectral_norm(const Matrix2& m) {
  const double f = m.m00 * m.m00 + m.m01 * m.m01 + m.m10 * m.m10 + m.m11 * m.m11;
  const double d = m.det();
  const double disc = std::sqrt(std::max(0.0, f * f - 4.0 * d * d));
  return std::sqrt(0.5 * (f + disc));
}

[[nodiscard]] inline double norm(const Vec2& x) { return std::hypot(x[0], x[1]); }

/// Unwound polar angle. `theta` carries the lift; `winding` is floor(theta / 2pi).
struct AngleLift {
  double theta = 0.0;

  [[nodiscard]] long winding() const { return static_cast<long>(std::floor(theta / (2.0 * kPi))); }
  [[nodiscard]] double reduced() const {
    double r = theta - 2.0 * kPi * std::floor(theta / (2.0 * kPi));
    if (r >= 2.0 * kPi) r = 0.0;
    return r;
  }
};

[[nodiscard]] inline std::pair<Matrix2, Matrix2> build_matrices(const SystemParams& p) {
  return {Matrix2{-p.a, p.b, -1.0 / p.b, -p.a}, Matrix2{-p.a, 1.0 / p.b, -p.b, -p.a}};
}

[[nodiscard]] inline Matrix2 mode_matrix(const SystemParams& p, Mode mode) {
  const auto [a0, a1] = build_matrices(p);
  return mode.value() == 0 ? a0 : a1;
}

/// d_i(theta) = <A_i e_theta, e_{theta + pi/2}>.
[[nodiscard]] inline double angular_drift(double theta, Mode mode, const SystemParams& p) {
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  if (mode.value() == 0) return -p.b * s * s - c * c / p.b;
  return -s * s / p.b - p.b * c * c;
}

/// A(theta, i) = <A_i e_theta, e_theta>.
[[nodiscard]] inline double radial_drift(double theta, Mode mode, const SystemParams& p) {
  const double sign = mode.value() == 0 ? 1.0 : -1.0;
  return -p.a + sign * 0.5 * (p.b - 1.0 / p.b) * std::sin(2.0 * theta);
}

/// Continuous lift of arctan(c * tan(theta)) to the whole real line:
/// increasing, equal to theta at multiples of pi/2, and shifted by pi per period.
/// The inverse of lifted_arctan(c, .) is lifted_arctan(1/c, .).
[[nodiscard]] inline double lifted_arctan(double c, double theta) {
  const double k = std::floor(theta / kPi);
  const double r = theta - k * kPi;  // in [0, pi)
  double base;
  if (r == 0.5 * kPi) {
    base = 0.5 * kPi;
  } else if (r < 0.5 * kPi) {
    base = std::atan(c * std::tan(r));
  } else {
    base = std::atan(c * std::tan(r)) + kPi;
  }
  return base + k * kPi;
}

/// Primitive of -(u/d0 + (1-u)/d1) vanishing at zero. Odd, increasing,
/// v(theta + pi) = v(theta) + pi.
[[nodiscard]] inline double v_function(double theta, const SystemParams& p) {
  return p.u * lifted_arctan(p.b, theta) + (1.0 - p.u) * lifted_arctan(1.0 / p.b, theta);
}

/// v'(theta) = -(u/d0 + (1-u)/d1) > 0.
[[nodiscard]] inline double v_derivative(double theta, const SystemParams& p) {
  return -(p.u / angular_drift(theta, kMode0, p) + (1.0 - p.u) / angular_drift(theta, kMode1, p));
}

/// B_i(t): the a-free part of e^{t A_i}, a unit-determinant elliptic rotation.
[[nodiscard]] inline Matrix2 rotation_part(double t, Mode mode, const SystemParams& p) {
  const double c = std::cos(t);
  const double s = std::sin(t);
  if (mode.value() == 0) return {c, p.b * s, -s / p.b, c};
  return {c, s / p.b, -p.b * s, c};
}

/// e^{t A_i} = e^{-a t} B_i(t), exact.
[[nodiscard]] inline Matrix2 mode_flow(double t, Mode mode, const SystemParams& p) {
  if (t < 0.0) throw InvalidArgument("mode_flow: t must be >= 0");
  return std::exp(-p.a * t) * rotation_part(t, mode, p);
}

/// Angle reached after flowing for time t in `mode` from angle theta (both unwound).
/// In the rescaled frame where B_i is a rigid rotation the angle decreases at unit
/// speed, so the lift is exact.
[[nodiscard]] inline double advance_angle(double theta, double t, Mode mode, const SystemParams& p) {
  const double c = mode.value() == 0 ? p.b : 1.0 / p.b;
  return lifted_arctan(1.0 / c, lifted_arctan(c, theta) - t);
}

/// e^{tM} by scaling and squaring with a degree-13 Pade approximant (Eigen's expm).
[[nodiscard]] inline Eigen::MatrixXd general_matrix_exp(const Eigen::MatrixXd& m, double t) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionMismatch("general_matrix_exp: matrix must be square and non-empty");
  }
  if (!m.allFinite() || !std::isfinite(t)) {
    throw InvalidArgument("general_matrix_exp: non-finite input");
  }
  const Eigen::MatrixXd scaled = t * m;
  return scaled.exp();
}

}  // namespace switchlab
