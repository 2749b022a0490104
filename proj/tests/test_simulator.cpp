#include <gtest/gtest.h>

#include <cmath>

#include "switchlab/flow.hpp"
#include "switchlab/invariant_measure.hpp"
#include "switchlab/simulator.hpp"

using namespace switchlab;

namespace {

SystemParams base(double beta = 2.0) { return make_params(0.15, 3.0, beta, 0.5); }

// E[N_t] for the two-state chain started in mode 0, integrated by hand.
double expected_jumps(double l0, double l1, double t) {
  const double S = l0 + l1;
  const double w0 = l1 / S;  // stationary weight of mode 0
  // p0(s) = w0 + (1 - w0) e^{-S s}; rate out = l0 p0 + l1 (1 - p0)
  const double int_p0 = w0 * t + (1.0 - w0) * (1.0 - std::exp(-S * t)) / S;
  return l0 * int_p0 + l1 * (t - int_p0);
}

}  // namespace

TEST(Law, NamesAndValidation) {
  EXPECT_EQ(SwitchingLaw::exponential().name(), "exponential");
  EXPECT_EQ(SwitchingLaw::erlang(7).name(), "erlang-7");
  EXPECT_EQ(SwitchingLaw::periodic().name(), "periodic");
  EXPECT_THROW((void)SwitchingLaw::erlang(0), InvalidArgument);
  EXPECT_THROW(SwitchingLaw::erlang(3).validate(make_params(0.1, 2.0, 1.0, 0.3)), InvalidArgument);
  EXPECT_NO_THROW(SwitchingLaw::erlang(3).validate(base()));
  EXPECT_EQ(erlang_first_stage(kMode1, 5), 0);
  EXPECT_EQ(erlang_first_stage(kMode0, 5), 5);
}

TEST(Law, ErlangSojournMoments) {
  const auto p = base(1.6);
  const auto law = SwitchingLaw::erlang(8);
  Rng rng(4);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = law.draw_duration(Mode(i % 2), p, rng);
    s += d;
    s2 += d * d;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  const double want_var = 4.0 / (8 * p.beta * p.beta);
  EXPECT_NEAR(mean, 2.0 / p.beta, 4.0 * std::sqrt(want_var / n));
  EXPECT_NEAR(var, want_var, 0.02 * want_var);
}

TEST(Law, PeriodicIsDeterministic) {
  const auto p = make_params(0.1, 2.0, 1.0, 0.25);
  Rng rng(1);
  EXPECT_DOUBLE_EQ(SwitchingLaw::periodic().draw_duration(kMode0, p, rng), 4.0);
  EXPECT_DOUBLE_EQ(SwitchingLaw::periodic().draw_duration(kMode1, p, rng), 4.0 / 3.0);
}

TEST(Simulate, RecordStructure) {
  const auto p = base();
  const auto rec = simulate(p, SwitchingLaw::exponential(), {0.6, -0.8}, kMode1, 30.0, 17, {0.05});
  ASSERT_GE(rec.samples.size(), 600u);
  EXPECT_EQ(rec.samples.front().t, 0.0);
  EXPECT_EQ(rec.samples.back().t, 30.0);
  EXPECT_EQ(rec.samples.front().mode, 1);
  EXPECT_NEAR(rec.samples.front().log_radius, 0.0, 1e-15);
  EXPECT_EQ(rec.law, "exponential");
  EXPECT_FALSE(rec.events.empty());
  int mode = 1;
  for (std::size_t k = 0; k < rec.events.size(); ++k) {
    EXPECT_EQ(rec.events[k].mode, 1 - mode);
    mode = rec.events[k].mode;
    if (k) {
      EXPECT_GT(rec.events[k].t, rec.events[k - 1].t);
    }
  }
  for (std::size_t i = 1; i < rec.samples.size(); ++i) {
    const auto& s = rec.samples[i];
    EXPECT_GE(s.t, rec.samples[i - 1].t);
    EXPECT_NEAR(std::log(std::hypot(s.x[0], s.x[1])), s.log_radius, 1e-10);
    EXPECT_NEAR(std::remainder(s.theta - std::atan2(s.x[1], s.x[0]), 2.0 * kPi), 0.0, 1e-9);
    EXPECT_LE(s.theta, rec.samples[i - 1].theta + 1e-12);  // both modes rotate clockwise
  }
}

TEST(Simulate, ExactFlowBetweenJumps) {
  const auto p = base();
  const auto rec = simulate(p, SwitchingLaw::periodic(), {1.0, 0.0}, kMode0, 1.5, 1, {});
  // periodic sojourns are 1/lambda0 = 1: one switch at t = 1
  ASSERT_EQ(rec.events.size(), 1u);
  EXPECT_DOUBLE_EQ(rec.events[0].t, 1.0);
  const Vec2 x = (mode_flow(0.5, kMode1, p) * mode_flow(1.0, kMode0, p)).apply({1.0, 0.0});
  EXPECT_NEAR(rec.samples.back().x[0], x[0], 1e-13);
  EXPECT_NEAR(rec.samples.back().x[1], x[1], 1e-13);
}

TEST(Simulate, DegenerateSpiralSlope) {
  const auto p = make_params(0.2, 1.0, 3.0, 0.5, true);
  const auto rec = simulate(p, SwitchingLaw::exponential(), {2.0, 0.0}, kMode0, 50.0, 9, {0.5});
  for (const auto& s : rec.samples) EXPECT_NEAR(s.log_radius, std::log(2.0) - 0.2 * s.t, 1e-11);
}

TEST(Simulate, SeedDeterminism) {
  const auto p = base();
  const auto a = simulate(p, SwitchingLaw::exponential(), {1.0, 0.0}, kMode0, 10.0, 5, {0.1});
  const auto b = simulate(p, SwitchingLaw::exponential(), {1.0, 0.0}, kMode0, 10.0, 5, {0.1});
  const auto c = simulate(p, SwitchingLaw::exponential(), {1.0, 0.0}, kMode0, 10.0, 6, {0.1});
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t k = 0; k < a.events.size(); ++k) EXPECT_EQ(a.events[k].t, b.events[k].t);
  EXPECT_NE(a.events.front().t, c.events.front().t);
}

TEST(Simulate, RejectsBadInput) {
  const auto p = base();
  EXPECT_THROW((void)simulate(p, SwitchingLaw::exponential(), {0.0, 0.0}, kMode0, 1.0, 1), InvalidArgument);
  EXPECT_THROW((void)simulate(p, SwitchingLaw::exponential(), {1.0, 0.0}, kMode0, -1.0, 1), InvalidArgument);
}

TEST(Simulate, LongHorizonDoesNotUnderflow) {
  // chi(0.05) ~ -0.137: |X_T| ~ e^{-2700} underflows a double, the log radius must not
  const auto p = base(0.05);
  const auto rec = simulate(p, SwitchingLaw::exponential(), {1.0, 0.0}, kMode0, 2e4, 3, {});
  EXPECT_TRUE(std::isfinite(rec.samples.back().log_radius));
  EXPECT_LT(rec.samples.back().log_radius, -700.0);
}

TEST(MonteCarlo, WorkerCountInvariance) {
  const auto p = base();
  const auto one = mc_growth_samples(p, SwitchingLaw::exponential(), 200.0, 9, 77, 1);
  const auto three = mc_growth_samples(p, SwitchingLaw::exponential(), 200.0, 9, 77, 3);
  EXPECT_EQ(one, three);
}

TEST(MonteCarlo, AgreesWithQuadrature) {
  for (double beta : {0.3, 2.0}) {
    const auto p = base(beta);
    const auto mc = estimate_chi_mc(p, SwitchingLaw::exponential(), 3000.0, 24, 2024);
    const double q = lyapunov_chi(p).value;
    EXPECT_LE(std::abs(mc.value - q), 3.0 * mc.error + 2e-3) << "beta " << beta;
    EXPECT_EQ(mc.method, ChiMethod::MonteCarlo);
    EXPECT_TRUE(mc.warnings.empty());
  }
  const auto short_run = estimate_chi_mc(base(0.1), SwitchingLaw::exponential(), 100.0, 2, 1);
  EXPECT_FALSE(short_run.warnings.empty());
}

TEST(MonteCarlo, ErlangOneIsExponentialAtHalf) {
  // Erlang(1) sojourns have rate beta/2 = lambda_i when u = 1/2
  const auto p = base(1.0);
  const auto e = estimate_chi_erlang(p, 1, 2000.0, 16, 5);
  const auto x = estimate_chi_mc(p, SwitchingLaw::exponential(), 2000.0, 16, 6);
  EXPECT_EQ(e.method, ChiMethod::ErlangMonteCarlo);
  EXPECT_LE(std::abs(e.value - x.value), 3.0 * std::hypot(e.error, x.error) + 2e-3);
}

TEST(MonteCarlo, PathwiseGapShrinksWithStages) {
  const auto p = base(1.0);
  const double g10 = pathwise_convergence_stat(p, 10, 20.0, 16, 3).mean;
  const double g200 = pathwise_convergence_stat(p, 200, 20.0, 16, 3).mean;
  EXPECT_GT(g10, g200);
  EXPECT_GT(g200, 0.0);
}

TEST(Moments, JensenOrdering) {
  const auto p = base(2.0);
  const auto m = estimate_chi_p(p, 1.0, 8.0, 4, 200, 31);
  const double combined = std::hypot(m.std_error, m.chi_mean_std_error);
  EXPECT_GE(m.chi_p, m.chi_mean - 3.0 * combined);
  EXPECT_THROW((void)estimate_chi_p(p, -1.0, 8.0, 4, 200, 31), InvalidArgument);
}

TEST(JumpCount, EqualRatesArePoisson) {
  for (double c : {0.0, 0.5, 1.2, 3.0}) {
    for (double t : {0.0, 0.3, 2.0}) {
      EXPECT_NEAR(jump_count_mgf(c, t, 0.8, 0.8, kMode0), std::exp(0.8 * t * (c - 1.0)), 1e-12);
      EXPECT_NEAR(jump_count_mgf(c, t, 0.8, 0.8, kMode1), std::exp(0.8 * t * (c - 1.0)), 1e-12);
    }
  }
}

TEST(JumpCount, ValueAtOneAndMeanJumps) {
  EXPECT_NEAR(jump_count_mgf(1.0, 2.5, 1.0, 3.0, kMode0), 1.0, 1e-14);
  const double h = 1e-6;
  const double slope = (jump_count_mgf(1.0 + h, 2.0, 1.0, 3.0, kMode0) - jump_count_mgf(1.0 - h, 2.0, 1.0, 3.0, kMode0)) /
                       (2.0 * h);
  EXPECT_NEAR(slope, expected_jumps(1.0, 3.0, 2.0), 1e-7);
}

TEST(JumpCount, SmallArgumentBranchIsContinuous) {
  // equal rates 0.5, c = 1.3: omega = 0.65, so omega t crosses the 1e-4 series cut-off here
  for (double wt : {0.99e-4, 1.01e-4}) {
    const double t = wt / 0.65;
    EXPECT_NEAR(jump_count_mgf(1.3, t, 0.5, 0.5, kMode0), std::exp(0.5 * t * 0.3), 1e-15);
    EXPECT_NEAR(jump_count_mgf(1.3, t, 0.5, 0.5, kMode1), std::exp(0.5 * t * 0.3), 1e-15);
  }
}

TEST(JumpCount, MatchesMonteCarlo) {
  const double g = jump_count_mgf(1.2, 2.0, 1.0, 3.0, kMode0);
  const auto mc = jump_count_mc(1.2, 2.0, 1.0, 3.0, kMode0, 100000, 8);
  EXPECT_LE(std::abs(g - mc.mean), 3.0 * mc.std_error);
  const double g1 = jump_count_mgf(0.4, 2.0, 1.0, 3.0, kMode1);
  const auto mc1 = jump_count_mc(0.4, 2.0, 1.0, 3.0, kMode1, 100000, 9);
  EXPECT_LE(std::abs(g1 - mc1.mean), 3.0 * mc1.std_error);
}

TEST(Coupling, ContractionBoundHolds) {
  const auto p = base(1.0);
  const auto [a0, a1] = build_matrices(p);
  const auto env = hurwitz_envelope(std::vector<FlowOperator>{FlowOperator(a0.to_eigen()), FlowOperator(a1.to_eigen())});
  for (double pexp : {1.0, 2.0}) {
    const auto r = coupling_contraction_check(p, env, pexp, 3.0, 2000, 12);
    EXPECT_TRUE(r.holds) << r.empirical << " vs " << r.analytic;
    EXPECT_GT(r.analytic, 0.0);
  }
}
