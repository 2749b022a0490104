#include <gtest/gtest.h>

#include <Eigen/Sparse>
#include <cmath>
#include <random>

#include "switchlab/invariant_measure.hpp"

using namespace switchlab;

namespace {

// Independent oracle: upwind finite-volume discretisation of the angle/mode
// chain on [0, pi) (everything is pi-periodic), solved for its stationary law.
// First-order in the cell width, so accurate to roughly 1e-3 at n = 4000.
double chi_finite_volume(const SystemParams& p, int n) {
  const double h = kPi / n;
  const int N = 2 * n;
  std::vector<Eigen::Triplet<double>> trip;
  auto idx = [&](int j, int m) { return m * n + ((j % n) + n) % n; };
  const double lam[2] = {p.lambda0(), p.lambda1()};
  for (int m = 0; m < 2; ++m) {
    for (int j = 0; j < n; ++j) {
      const double theta = (j + 0.5) * h;
      const double out = -angular_drift(theta, Mode(m), p) / h;  // drift < 0: mass moves to cell j - 1
      // transpose of the generator: row = target, column = source
      trip.emplace_back(idx(j - 1, m), idx(j, m), out);
      trip.emplace_back(idx(j, 1 - m), idx(j, m), lam[m]);
      trip.emplace_back(idx(j, m), idx(j, m), -out - lam[m]);
    }
  }
  Eigen::SparseMatrix<double> Qt(N, N);
  Qt.setFromTriplets(trip.begin(), trip.end());
  // replace one equation by the normalisation
  for (int k = 0; k < N; ++k) Qt.coeffRef(0, k) = 1.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
  rhs(0) = 1.0;
  Qt.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Qt);
  const Eigen::VectorXd pi = lu.solve(rhs);
  double chi = 0.0;
  for (int m = 0; m < 2; ++m) {
    for (int j = 0; j < n; ++j) chi += pi(idx(j, m)) * radial_drift((j + 0.5) * h, Mode(m), p);
  }
  return chi;
}

std::vector<SystemParams> random_sample(int count, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<SystemParams> out;
  for (int k = 0; k < count; ++k) {
    out.push_back(make_params(0.05 + 0.45 * U(g), 1.5 + 3.5 * U(g), 0.1 * std::pow(200.0, U(g)), 0.1 + 0.8 * U(g)));
  }
  return out;
}

}  // namespace

TEST(HalfPeriod, DegenerateClosedForm) {
  for (double beta : {0.1, 1.0, 7.0}) {
    const auto p = make_params(0.2, 1.0, beta, 0.3, true);
    const double F = half_period_integral(p);
    EXPECT_NEAR(F, -(1.0 - std::exp(-beta * kPi)) / beta, 1e-13);
    EXPECT_NEAR(full_integral_from_half(F, p), -1.0 / beta, 1e-12);
  }
}

TEST(HalfPeriod, MatchesCompositeSimpson) {
  const auto p = make_params(0.15, 3.0, 1.0, 0.5);
  auto w = [&](double a) { return std::exp(-p.beta * v_function(a, p)) / angular_drift(a, kMode1, p); };
  const int n = 1000000;
  const double h = kPi / n;
  double s = w(0.0) + w(kPi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * w(i * h);
  const double simpson = s * h / 3.0;
  const double F = half_period_integral(p);
  EXPECT_LT(F, 0.0);
  EXPECT_NEAR(F, simpson, 1e-9);
}

TEST(TailIntegral, ShiftAndEndpoints) {
  const auto p = make_params(0.15, 3.0, 1.7, 0.4);
  const double F = half_period_integral(p);
  const double I = full_integral_from_half(F, p);
  EXPECT_NEAR(tail_integral(0.0, p, F, I), I, 1e-15);
  EXPECT_NEAR(tail_integral(kPi, p, F, I), std::exp(-p.beta * kPi) * I, 1e-13);
  for (double t : {0.3, 2.0, 4.0, 6.0}) EXPECT_LT(tail_integral(t, p, F, I), 0.0);
  const auto d = make_params(0.15, 1.0, 1.7, 0.4, true);
  const double Fd = half_period_integral(d);
  const double Id = full_integral_from_half(Fd, d);
  for (double t : {0.3, 2.0, 5.5}) EXPECT_NEAR(tail_integral(t, d, Fd, Id), -std::exp(-d.beta * t) / d.beta, 1e-12);
}

TEST(Constants, SignsAndRatio) {
  for (const auto& p : random_sample(6, 21)) {
    const auto c = compute_constants(p);
    EXPECT_LT(c.bigC, 0.0);
    EXPECT_LT(c.bigK, 0.0);
    EXPECT_GT(c.kappa, 0.0);
    EXPECT_NEAR(c.kappa * c.bigK, c.bigC, 1e-12 * std::abs(c.bigC));
    EXPECT_FALSE(c.normalization_fallback);
  }
}

TEST(Constants, DegenerateClosedForm) {
  const auto p = make_params(0.2, 1.0, 1.3, 0.35, true);
  const InvariantMeasure m(p);
  const double kappa = 1.0 / (p.beta * (1.0 - p.u) / p.beta);  // I_inf = -1/beta
  EXPECT_NEAR(m.constants().kappa, kappa, 1e-12);
  EXPECT_NEAR(1.0 / m.constants().bigK, -2.0 * kPi * kappa, 1e-10);
  EXPECT_NEAR(inverse_k_closed_form(m), -2.0 * kPi * kappa, 1e-10);
  double mass0 = 0.0, mass1 = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double t = 2.0 * kPi * i / 64.0;
    const auto [r0, r1] = m.rho(t);
    EXPECT_NEAR(r0 + r1, 1.0 / (2.0 * kPi), 1e-12);
    mass0 += r0 * 2.0 * kPi / 64.0;
    mass1 += r1 * 2.0 * kPi / 64.0;
  }
  EXPECT_NEAR(mass0, 1.0 - p.u, 1e-12);
  EXPECT_NEAR(mass1, p.u, 1e-12);
}

TEST(Measure, InvariantsOverRandomSample) {
  for (const auto& p : random_sample(20, 7)) {
    const InvariantMeasure m(p);
    const auto& c = m.constants();
    EXPECT_NEAR(m.total_mass(), 1.0, 1e-8);
    EXPECT_NEAR(1.0 / inverse_k_closed_form(m), c.bigK, 1e-8 * std::abs(c.bigK));
    for (int i = 0; i < 1000; ++i) {
      const double t = 2.0 * kPi * (i + 0.37) / 1000.0;
      const auto [r0, r1] = m.rho(t);
      EXPECT_GE(r0, -1e-12);
      EXPECT_GE(r1, -1e-12);
      EXPECT_NEAR(angular_drift(t, kMode0, p) * r0 + angular_drift(t, kMode1, p) * r1, c.bigC, 1e-9);
      // Phi' = -beta Phi (u/d0 + (1-u)/d1) + beta C (1-u)/d1
      const double h = 1e-5;
      const double d0 = angular_drift(t, kMode0, p), d1 = angular_drift(t, kMode1, p);
      const double lhs = (m.phi(t + h) - m.phi(t - h)) / (2.0 * h);
      const double rhs = -p.beta * m.phi(t) * (p.u / d0 + (1.0 - p.u) / d1) + p.beta * c.bigC * (1.0 - p.u) / d1;
      EXPECT_NEAR(lhs, rhs, 1e-5);
    }
    EXPECT_LE(stationarity_residual(m, 4), 1e-6);
    EXPECT_NEAR(m.chi_formula(), m.chi_ergodic(), 1e-6);
  }
}

TEST(Measure, PeriodicEvaluator) {
  const InvariantMeasure m(make_params(0.15, 3.0, 2.0, 0.5));
  for (double t : {0.0, 0.4, 1.9, 3.3}) {
    // t + 2 pi is itself rounded, so agreement is to the last few ulps
    EXPECT_NEAR(m.rho0(t), m.rho0(t + 2.0 * kPi), 1e-13 * m.rho0(t));
    EXPECT_NEAR(m.rho1(t), m.rho1(t + 2.0 * kPi), 1e-13 * m.rho1(t));
    EXPECT_EQ(m.rho0(0.0), m.rho0(2.0 * kPi));
  }
  EXPECT_DOUBLE_EQ(m.g(0.0), 1.0);
}

TEST(DensityPair, GridAndMismatchedConstants) {
  const auto p = make_params(0.15, 3.0, 2.0, 0.5);
  const auto c = compute_constants(p);
  const auto pair = density_pair(p, c, 512);
  ASSERT_EQ(pair.grid().size(), 512u);
  double mass = 0.0;
  for (std::size_t i = 0; i < 512; ++i) mass += (pair.rho0_grid()[i] + pair.rho1_grid()[i]) * 2.0 * kPi / 512.0;
  EXPECT_NEAR(mass, 1.0, 1e-8);  // trapezoid on a smooth periodic function
  EXPECT_THROW((void)density_pair(make_params(0.15, 3.0, 5.0, 0.5), c), InvalidArgument);
}

TEST(Stationarity, DegenerateCosine) {
  const auto p = make_params(0.1, 1.0, 2.0, 0.3, true);
  EXPECT_LE(stationarity_residual(p, 1), 1e-10);
  EXPECT_LE(stationarity_residual(make_params(0.15, 3.0, 2.0, 0.5), 4), 1e-6);
}

TEST(Chi, DegenerateIsMinusA) {
  for (double beta : {0.01, 1.0, 50.0}) {
    EXPECT_NEAR(lyapunov_chi(make_params(0.23, 1.0, beta, 0.4, true)).value, -0.23, 1e-12);
  }
}

TEST(Chi, ShiftInA) {
  for (const auto& p : random_sample(5, 3)) {
    auto q = p;
    q.a = p.a + 0.37;
    EXPECT_NEAR(lyapunov_chi(p).value + p.a, lyapunov_chi(q).value + q.a, 1e-9);
  }
}

TEST(Chi, LimitsInBeta) {
  EXPECT_NEAR(lyapunov_chi(make_params(0.15, 3.0, 1e-3, 0.5)).value, -0.15, 0.01);
  EXPECT_NEAR(lyapunov_chi(make_params(0.15, 3.0, 1e3, 0.5)).value, -0.15, 0.01);
}

TEST(Chi, AgreesWithFiniteVolumeOracle) {
  for (double beta : {0.3, 2.0, 5.0}) {
    const auto p = make_params(0.15, 3.0, beta, 0.5);
    EXPECT_NEAR(lyapunov_chi(p).value, chi_finite_volume(p, 4000), 2e-3) << "beta " << beta;
  }
  const auto q = make_params(0.1, 2.5, 1.0, 0.3);
  EXPECT_NEAR(lyapunov_chi(q).value, chi_finite_volume(q, 4000), 2e-3);
}

TEST(Chi, PositiveBumpWithTwoCrossings) {
  int crossings = 0;
  double prev = 0.0, best = -1.0;
  for (int i = 0; i < 200; ++i) {
    const double beta = 0.05 * std::pow(4000.0, i / 199.0);
    const double c = lyapunov_chi(make_params(0.15, 3.0, beta, 0.5)).value;
    if (i > 0 && (c > 0.0) != (prev > 0.0)) ++crossings;
    prev = c;
    best = std::max(best, c);
  }
  EXPECT_EQ(crossings, 2);
  EXPECT_GT(best, 0.0);
}

TEST(FgDecomposition, ClosedFormAndZeroMean) {
  for (double b : {2.0, 3.0, 5.0}) {
    const auto p = make_params(0.15, b, 1.0, 0.5);
    const auto d = theorem31_fg_decomposition(p, 33);
    EXPECT_NEAR(d.f_integral_numeric, d.f_integral_closed, 1e-8);
    EXPECT_NEAR(d.f_integral_closed, -4.0 * std::log(b), 1e-10);
    EXPECT_DOUBLE_EQ(d.g.front(), 1.0);
    auto s = [&](double t) { return std::sin(2.0 * t) * (1.0 / angular_drift(t, kMode0, p) + 1.0 / angular_drift(t, kMode1, p)); };
    EXPECT_NEAR(quad::adaptive(s, 0.0, 2.0 * kPi, 1e-12).value, 0.0, 1e-10);
  }
}

TEST(ChiMethod, Names) {
  EXPECT_EQ(to_string(ChiMethod::Quadrature), "quadrature");
  EXPECT_EQ(to_string(ChiMethod::ErlangMonteCarlo), "erlang-mc");
}
