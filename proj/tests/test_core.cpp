#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "switchlab/core.hpp"
#include "switchlab/flow.hpp"

using namespace switchlab;

namespace {

SystemParams base() { return make_params(0.15, 3.0, 2.0, 0.5); }

// e^{tA} by a plain Taylor series on a small step, squared back up; independent of Eigen's expm.
Eigen::MatrixXd taylor_exp(const Eigen::MatrixXd& m, double t) {
  int squarings = 0;
  double scale = t * m.norm();
  while (scale > 0.01) {
    scale /= 2.0;
    ++squarings;
  }
  const Eigen::MatrixXd x = (t / std::ldexp(1.0, squarings)) * m;
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * x / k;
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace

TEST(Params, RejectsInvalid) {
  EXPECT_THROW((void)make_params(0.0, 3.0, 1.0, 0.5), InvalidArgument);
  EXPECT_THROW((void)make_params(0.1, 3.0, -1.0, 0.5), InvalidArgument);
  EXPECT_THROW((void)make_params(0.1, 3.0, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW((void)make_params(0.1, 0.5, 1.0, 0.5), InvalidArgument);
  EXPECT_THROW((void)make_params(0.1, NAN, 1.0, 0.5), InvalidArgument);
  EXPECT_NO_THROW((void)make_params(0.1, 1.0, 1.0, 0.5, true));
}

TEST(Params, Rates) {
  const auto p = make_params(0.1, 2.0, 4.0, 0.25);
  EXPECT_DOUBLE_EQ(p.lambda0(), 1.0);
  EXPECT_DOUBLE_EQ(p.lambda1(), 3.0);
}

TEST(Matrices, HurwitzPairWithEqualTraceAndDeterminant) {
  const auto [a0, a1] = build_matrices(base());
  EXPECT_DOUBLE_EQ(a0.trace(), -0.3);
  EXPECT_DOUBLE_EQ(a1.trace(), -0.3);
  EXPECT_NEAR(a0.det(), 0.15 * 0.15 + 1.0, 1e-15);
  EXPECT_NEAR(a1.det(), 0.15 * 0.15 + 1.0, 1e-15);
}

TEST(Drift, AngularDriftNegativeOnGrid) {
  const auto p = base();
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> th(0.0, 2.0 * kPi);
  for (int i = 0; i < 10000; ++i) {
    const double t = 2.0 * kPi * i / 10000.0;
    EXPECT_LT(angular_drift(t, kMode0, p), 0.0);
    EXPECT_LT(angular_drift(t, kMode1, p), 0.0);
  }
  for (int i = 0; i < 1000; ++i) {
    const double t = th(g);
    EXPECT_LT(angular_drift(t, kMode0, p), 0.0);
    EXPECT_LT(angular_drift(t, kMode1, p), 0.0);
  }
}

TEST(Drift, MatchesMatrixDefinition) {
  const auto p = base();
  for (int m = 0; m < 2; ++m) {
    const auto A = mode_matrix(p, Mode(m));
    for (double t : {0.0, 0.3, 1.1, 2.5, 4.0}) {
      const Vec2 e{std::cos(t), std::sin(t)};
      const Vec2 f{-std::sin(t), std::cos(t)};
      const Vec2 ae = A.apply(e);
      EXPECT_NEAR(angular_drift(t, Mode(m), p), ae[0] * f[0] + ae[1] * f[1], 1e-14);
      EXPECT_NEAR(radial_drift(t, Mode(m), p), ae[0] * e[0] + ae[1] * e[1], 1e-14);
    }
  }
}

TEST(Drift, RadialDriftsSumToMinusTwoA) {
  const auto p = base();
  for (int i = 0; i < 1000; ++i) {
    const double t = 0.0123 * i;
    EXPECT_NEAR(radial_drift(t, kMode0, p) + radial_drift(t, kMode1, p), -2.0 * p.a, 1e-15);
  }
}

TEST(VFunction, ShiftByPi) {
  const auto p = make_params(0.15, 3.0, 1.0, 0.3);
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> th(0.0, 10.0 * kPi);
  for (int i = 0; i < 1000; ++i) {
    const double t = th(g);
    EXPECT_NEAR(v_function(t + kPi, p) - v_function(t, p), kPi, 1e-12);
  }
}

TEST(VFunction, MonotoneAndPrimitive) {
  const auto p = make_params(0.15, 3.0, 1.0, 0.3);
  std::mt19937_64 g(12);
  std::uniform_real_distribution<double> th(0.0, 10.0 * kPi);
  for (int i = 0; i < 1000; ++i) {
    double t1 = th(g), t2 = th(g);
    if (t1 > t2) std::swap(t1, t2);
    if (t1 == t2) continue;
    EXPECT_GT(v_function(t2, p), v_function(t1, p));
    const double h = 1e-6;
    const double fd = (v_function(t1 + h, p) - v_function(t1 - h, p)) / (2.0 * h);
    EXPECT_NEAR(fd, v_derivative(t1, p), 1e-6);
  }
  EXPECT_EQ(v_function(0.0, p), 0.0);
  EXPECT_DOUBLE_EQ(v_function(0.5 * kPi, p), 0.5 * kPi);
}

TEST(VFunction, DegenerateIsIdentity) {
  const auto p = make_params(0.2, 1.0, 1.0, 0.7, true);
  for (double t : {0.1, 1.0, 2.0, 7.5}) EXPECT_NEAR(v_function(t, p), t, 1e-14);
}

TEST(Flow, MatchesMatrixExponential) {
  const auto p = base();
  for (int m = 0; m < 2; ++m) {
    const Eigen::MatrixXd A = mode_matrix(p, Mode(m)).to_eigen();
    for (double t : {0.0, 0.4, 1.0, 3.7}) {
      const Eigen::MatrixXd ref = taylor_exp(A, t);
      const Eigen::MatrixXd got = mode_flow(t, Mode(m), p).to_eigen();
      EXPECT_LT((ref - got).cwiseAbs().maxCoeff(), 1e-12) << "mode " << m << " t " << t;
      EXPECT_LT((general_matrix_exp(A, t) - got).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Flow, Semigroup) {
  const auto p = base();
  for (int m = 0; m < 2; ++m) {
    for (double s : {0.2, 1.3}) {
      for (double t : {0.7, 2.9}) {
        const auto lhs = mode_flow(s + t, Mode(m), p).to_eigen();
        const auto rhs = (mode_flow(s, Mode(m), p) * mode_flow(t, Mode(m), p)).to_eigen();
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
  EXPECT_THROW((void)mode_flow(-1.0, kMode0, p), InvalidArgument);
}

TEST(Flow, AdvanceAngleMatchesAtan2) {
  const auto p = base();
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> th(0.0, 2.0 * kPi), dt(0.0, 5.0);
  for (int i = 0; i < 500; ++i) {
    const double t0 = th(g), t = dt(g);
    const Mode m(i % 2);
    const double lifted = advance_angle(t0, t, m, p);
    const Vec2 x = mode_flow(t, m, p).apply({std::cos(t0), std::sin(t0)});
    const double wrapped = std::atan2(x[1], x[0]);
    const double diff = std::remainder(lifted - wrapped, 2.0 * kPi);
    EXPECT_NEAR(diff, 0.0, 1e-12);
    EXPECT_LE(lifted, t0 + 1e-15);  // clockwise rotation only
  }
}

TEST(MatrixExp, BlockDiagonal) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
  m.topLeftCorner(2, 2) = mode_matrix(base(), kMode0).to_eigen();
  m(2, 2) = -1.0;
  const Eigen::MatrixXd e = general_matrix_exp(m, 1.5);
  EXPECT_LT((e.topLeftCorner(2, 2) - mode_flow(1.5, kMode0, base()).to_eigen()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(e(2, 2), std::exp(-1.5), 1e-14);
  EXPECT_NEAR(e(0, 2), 0.0, 1e-15);
  EXPECT_THROW((void)general_matrix_exp(Eigen::MatrixXd(2, 3), 1.0), DimensionMismatch);
}

TEST(FlowOperator, FastPathAgreesWithExpm) {
  Eigen::MatrixXd A(3, 3);
  A << -1.0, 2.0, 0.0, -0.5, -1.0, 0.3, 0.0, 0.0, -2.0;
  const FlowOperator f(A);
  for (double t : {0.0, 0.5, 3.0}) EXPECT_LT((f(t) - general_matrix_exp(A, t)).cwiseAbs().maxCoeff(), 1e-12);
  // Jordan block: no eigenbasis, must take the general route
  Eigen::MatrixXd J(2, 2);
  J << -1.0, 1.0, 0.0, -1.0;
  const FlowOperator fj(J);
  EXPECT_FALSE(fj.diagonalized());
  EXPECT_NEAR(fj(2.0)(0, 1), 2.0 * std::exp(-2.0), 1e-14);
}

TEST(FlowOperator, EnvelopeBoundsSampledNorms) {
  const auto p = base();
  std::vector<FlowOperator> flows{FlowOperator(mode_matrix(p, kMode0).to_eigen()),
                                  FlowOperator(mode_matrix(p, kMode1).to_eigen())};
  const auto env = hurwitz_envelope(flows);
  EXPECT_GT(env.eta, 0.0);
  EXPECT_GE(env.C, 1.0);
  for (const auto& f : flows) {
    for (int i = 0; i <= 400; ++i) {
      const double t = 0.05 * i;
      EXPECT_LE(Eigen::JacobiSVD<Eigen::MatrixXd>(f(t)).singularValues()(0), env.C * std::exp(-env.eta * t) * (1.0 + 1e-12));
    }
  }
  EXPECT_TRUE(is_hurwitz(mode_matrix(p, kMode0).to_eigen()));
  EXPECT_NEAR(spectral_abscissa(mode_matrix(p, kMode0).to_eigen()), -0.15, 1e-12);
}
