#pragma once

// Exact linear flows t -> e^{tA} for small dense matrices.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "switchlab/core.hpp"
#include "switchlab/errors.hpp"

namespace switchlab {

/// e^{tA} for repeated t. Uses a well-conditioned eigendecomposition when one
/// exists (O(d^2) per call) and falls back to Pade scaling and squaring.
class FlowOperator {
 public:
  FlowOperator() = default;
  explicit FlowOperator(Eigen::MatrixXd a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols() || a_.rows() < 1) throw DimensionMismatch("FlowOperator: matrix must be square");
    if (!a_.allFinite()) throw InvalidArgument("FlowOperator: non-finite matrix");
    Eigen::EigenSolver<Eigen::MatrixXd> es(a_);
    if (es.info() != Eigen::Success) return;
    const Eigen::MatrixXcd v = es.eigenvectors();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(v);
    if (!lu.isInvertible()) return;
    const Eigen::MatrixXcd vinv = lu.inverse();
    const double cond = v.norm() * vinv.norm();
    const Eigen::VectorXcd lam = es.eigenvalues();
    const Eigen::MatrixXcd back = v * lam.asDiagonal() * vinv;
    const double scale = std::max(1.0, a_.norm());
    if (cond < 1e6 && (back.real() - a_).norm() <= 1e-13 * scale * cond) {
      v_ = v;
      vinv_ = vinv;
      lambda_ = lam;
      diagonal_ = true;
    }
  }

  [[nodiscard]] Eigen::Index dim() const { return a_.rows(); }
  [[nodiscard]] const Eigen::MatrixXd& generator() const { return a_; }
  [[nodiscard]] bool diagonalized() const { return diagonal_; }
  [[nodiscard]] Eigen::VectorXcd eigenvalues() const {
    if (diagonal_) return lambda_;
    return Eigen::EigenSolver<Eigen::MatrixXd>(a_, false).eigenvalues();
  }

  [[nodiscard]] Eigen::MatrixXd operator()(double t) const {
    if (diagonal_) {
      const Eigen::VectorXcd e = (t * lambda_).array().exp();
      return (v_ * e.asDiagonal() * vinv_).real();
    }
    return general_matrix_exp(a_, t);
  }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXcd v_, vinv_;
  Eigen::VectorXcd lambda_;
  bool diagonal_ = false;
};

/// Constants (C, eta) with ||e^{tA_i} x|| <= C e^{-eta t} ||x|| for both generators.
struct HurwitzEnvelope {
  double C = 1.0;
  double eta = 0.0;
};

[[nodiscard]] inline double spectral_abscissa(const Eigen::MatrixXd& a) {
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(a, false).eigenvalues();
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) m = std::max(m, ev[i].real());
  return m;
}

[[nodiscard]] inline bool is_hurwitz(const Eigen::MatrixXd& a) { return spectral_abscissa(a) < 0.0; }

/// Envelope with eta = eta_fraction * min_i |spectral abscissa(A_i)| and C the
/// largest value of ||e^{tA_i}|| e^{eta t} over a uniform grid of [0, t_max].
/// C is an operator-norm bound, so it covers every x at the sampled times.
[[nodiscard]] inline HurwitzEnvelope hurwitz_envelope(const std::vector<FlowOperator>& flows,
                                                      double eta_fraction = 0.5, double t_max = 20.0,
                                                      int t_steps = 2001) {
  HurwitzEnvelope env;
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& f : flows) {
    const double s = spectral_abscissa(f.generator());
    if (!(s < 0.0)) throw InvalidArgument("hurwitz_envelope: generator is not Hurwitz");
    margin = std::min(margin, -s);
  }
  env.eta = eta_fraction * margin;
  env.C = 1.0;
  for (const auto& f : flows) {
    for (int k = 0; k < t_steps; ++k) {
      const double t = t_max * k / (t_steps - 1);
      const Eigen::MatrixXd e = f(t);
      const double op = Eigen::JacobiSVD<Eigen::MatrixXd>(e).singularValues()(0);
      env.C = std::max(env.C, op * std::exp(env.eta * t));
    }
  }
  // guard between grid points: e^{eta dt} covers the drift of the exponential factor
  env.C *= std::exp(env.eta * t_max / (t_steps - 1));
  return env;
}

}  // namespace switchlab
