#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "switchlab/kesten.hpp"

using namespace switchlab;

namespace {

DecenteredSystem minus_identity(double rate = 0.5) {
  const Eigen::MatrixXd I = -Eigen::MatrixXd::Identity(2, 2);
  return DecenteredSystem(I, I, Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(-1.0, 0.0), rate, rate);
}

std::vector<double> pareto(double alpha, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = std::pow(1.0 - rng.uniform(), -1.0 / alpha);
  return v;
}

// log B ~ N(mu, sigma^2): E B^p = exp(p mu + p^2 sigma^2 / 2) = 1 at p = -2 mu / sigma^2.
std::vector<double> lognormal(double mu, double sigma, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = std::exp(rng.normal(mu, sigma));
  return v;
}

}  // namespace

TEST(System, Validation) {
  const Eigen::MatrixXd I = -Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd U = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::Vector2d b0(1.0, 0.0), b1(-1.0, 0.0);
  EXPECT_THROW(DecenteredSystem(U, I, b0, b1, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(DecenteredSystem(I, I, b0, b0, 1.0, 1.0), InvalidArgument);
  EXPECT_NO_THROW(DecenteredSystem(I, I, b0, b0, 1.0, 1.0, true));
  EXPECT_THROW(DecenteredSystem(I, I, b0, b1, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(DecenteredSystem(I, I, Eigen::Vector3d(1, 0, 0), b1, 1.0, 1.0), DimensionMismatch);
}

TEST(System, AffineFlowFixesAttractor) {
  const auto sys = planar_decentered(make_params(0.15, 3.0, 0.3, 0.5), {1.0, 0.0}, {-1.0, 0.0});
  for (double t : {0.0, 0.5, 4.0}) {
    EXPECT_LT((sys.affine_flow(sys.b(kMode0), t, kMode0) - sys.b(kMode0)).norm(), 1e-15);
    EXPECT_LT((sys.affine_flow(sys.b(kMode1), t, kMode1) - sys.b(kMode1)).norm(), 1e-15);
  }
  EXPECT_DOUBLE_EQ(sys.rate(kMode0), 0.15);
}

TEST(System, Example68IsHurwitz) {
  std::vector<std::string> warn;
  const auto sys = example68_system(0.15, 3.0, {0, 0, 1}, {0, 0, -1}, 1.0, 1.0, &warn);
  EXPECT_EQ(sys.dim(), 3);
  EXPECT_TRUE(warn.empty());
  EXPECT_TRUE(is_hurwitz(sys.A(kMode0)));
  EXPECT_TRUE(is_hurwitz(sys.A(kMode1)));
  EXPECT_DOUBLE_EQ(sys.A(kMode0)(2, 2), -1.0);
  (void)example68_system(1.5, 3.0, {0, 0, 1}, {0, 0, -1}, 1.0, 1.0, &warn);
  EXPECT_EQ(warn.size(), 1u);
}

TEST(Envelope, BoundsSampledTrajectories) {
  const auto sys = example68_system(0.15, 3.0, {0, 0, 1}, {0, 0, -1});
  const auto env = hurwitz_envelope(sys);
  EXPECT_LE(envelope_worst_ratio(sys, env, 200), 1.0);
}

TEST(Simulate, DecenteredMatchesChain) {
  const auto sys = planar_decentered(make_params(0.15, 3.0, 1.0, 0.5), {1.0, 0.0}, {-1.0, 0.5});
  const Eigen::Vector2d y0 = sys.b(kMode0);
  const auto rec = simulate_decentered(sys, y0, kMode0, 40.0, 21);
  const auto chain = yn_chain(sys, y0, 5, 21);
  // samples: t = 0, then one per switch; Y_n sits at the 2n-th switch
  for (int n = 1; n <= 5 && static_cast<std::size_t>(2 * n) < rec.samples.size(); ++n) {
    const auto& s = rec.samples[2 * n];
    EXPECT_NEAR(s.x[0], chain(0, n - 1), 1e-12);
    EXPECT_NEAR(s.x[1], chain(1, n - 1), 1e-12);
  }
}

TEST(Simulate, ChainAgreesAcrossSeeds) {
  const auto sys = planar_decentered(make_params(0.15, 3.0, 0.3, 0.5), {1.0, 0.0}, {-1.0, 0.0});
  const Eigen::Vector2d y0(0.3, -0.2);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto chain = yn_chain(sys, y0, 1, seed);
    const auto rec = simulate_decentered(sys, y0, kMode0, 200.0, seed);  // two sojourns at rate 0.15 exceed 200 w.p. ~3e-12
    ASSERT_GE(rec.samples.size(), 3u);
    const auto& s = rec.samples[2];
    worst = std::max(worst, std::hypot(s.x[0] - chain(0, 0), s.x[1] - chain(1, 0)) / (1.0 + chain.col(0).norm()));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Simulate, DecenteredTheta) {
  const auto sys = planar_decentered(make_params(0.15, 3.0, 1.0, 0.5), {1.0, 0.0}, {-1.0, 0.5});
  const auto rec = simulate_decentered(sys, Eigen::Vector2d(3.0, 1.0), kMode1, 20.0, 4, {0.02});
  for (std::size_t i = 1; i < rec.samples.size(); ++i) {
    const auto& s = rec.samples[i];
    EXPECT_NEAR(std::remainder(s.theta - std::atan2(s.x[1], s.x[0]), 2.0 * kPi), 0.0, 1e-12);
    EXPECT_LT(std::abs(s.theta - rec.samples[i - 1].theta), kPi);
  }
}

TEST(SampleB, IdentityAndScalarOracles) {
  const auto sys = minus_identity(0.5);
  SampleBOptions zero;
  zero.zero_durations = true;
  for (double v : sample_B(sys, 1, 50, 1, zero)) EXPECT_DOUBLE_EQ(v, 1.0);
  // |B| = e^{-(tau0 + tau1)}: E log|B| = -(1/l0 + 1/l1) = -4
  const auto s = sample_B(sys, 1, 100000, 2);
  double m = 0.0;
  for (double v : s) m += std::log(v);
  m /= static_cast<double>(s.size());
  EXPECT_NEAR(m, -4.0, 4.0 * std::sqrt(8.0 / 100000.0));
  EXPECT_THROW((void)sample_B(sys, 2, 10, 1), InvalidArgument);
}

TEST(SampleB, WorkerInvariance) {
  const auto sys = planar_decentered(make_params(0.15, 3.0, 0.3, 0.5), {1.0, 0.0}, {-1.0, 0.0});
  SampleBOptions a, b;
  b.workers = 3;
  EXPECT_EQ(sample_B(sys, 1, 10000, 5, a), sample_B(sys, 1, 10000, 5, b));
}

TEST(Moments, LogMomentClosedForm) {
  const std::vector<double> l{std::log(1.0), std::log(2.0), std::log(4.0)};
  EXPECT_NEAR(log_moment(l, 1.0), std::log(7.0 / 3.0), 1e-15);
  EXPECT_NEAR(log_moment(l, 2.0, std::log(4.0)), std::log(21.0 / 3.0), 1e-14);
  EXPECT_EQ(log_moment(l, 0.0), 0.0);
}

TEST(Moments, LognormalRoot) {
  const auto s = lognormal(-0.5, 1.0, 200000, 3);
  MomentRootOptions o;
  o.bootstrap = 60;
  const auto e = moment_root_x1(s, o);
  ASSERT_TRUE(e.found);
  EXPECT_LE(e.ci_low, 1.0);
  EXPECT_GE(e.ci_high, 1.0);
  EXPECT_NEAR(e.x1, 1.0, 0.05);
}

TEST(Moments, IncrementRootOfIidProducts) {
  // products of m and 2m i.i.d. log-normals have the same moment root
  const auto s2 = lognormal(-1.0, std::sqrt(2.0), 100000, 4);
  const auto s4 = lognormal(-2.0, 2.0, 100000, 5);
  MomentRootOptions o;
  o.bootstrap = 40;
  const auto e = moment_increment_root(s2, s4, o, 2);
  ASSERT_TRUE(e.found);
  EXPECT_EQ(e.method, TailMethod::MomentIncrement);
  EXPECT_NEAR(e.x1, 1.0, 0.1);
}

TEST(Moments, NoRootReported) {
  // all samples below one: log m(p) < 0 for every p > 0
  std::vector<double> s(1000, 0.5);
  const auto e = moment_root_x1(s);
  EXPECT_FALSE(e.found);
  EXPECT_FALSE(e.message.empty());
}

TEST(Hill, ParetoRecovery) {
  const auto s = pareto(1.5, 200000, 9);
  HillOptions o;
  o.bootstrap = 100;
  const auto e = hill_tail_index(s, 2000, o);
  EXPECT_LE(e.ci_low, 1.5);
  EXPECT_GE(e.ci_high, 1.5);
  EXPECT_FALSE(e.light_tail_flag);
}

TEST(Hill, LightTailFlag) {
  Rng rng(6);
  std::vector<double> s(200000);
  for (auto& x : s) x = rng.exponential(1.0);
  HillOptions o;
  o.bootstrap = 10;
  EXPECT_TRUE(hill_tail_index(s, 447, o).light_tail_flag);
}

TEST(Hill, Refusals) {
  const auto s = pareto(2.0, 1000, 1);
  EXPECT_THROW((void)hill_tail_index(s, 1), InvalidArgument);
  EXPECT_THROW((void)hill_tail_index(s, 101), InvalidArgument);
  std::vector<double> tied(1000, 3.0);
  EXPECT_THROW((void)hill_tail_index(tied, 20), InvalidArgument);
  const auto st = hill_stability(s, {10, 50, 100});
  ASSERT_EQ(st.size(), 3u);
  EXPECT_EQ(st[1].first, 50u);
}

TEST(Chain, StationaryNormsBurnIn) {
  const auto sys = minus_identity();
  const auto chain = yn_chain(sys, sys.b(kMode0), 5000, 3);
  const auto v = stationary_norms(chain, 0.1, 1000);
  EXPECT_EQ(v.size(), 4000u);
  for (double x : v) EXPECT_LE(x, 1.0 + 1e-15);  // the segment between b0 and b1
  EXPECT_THROW((void)stationary_norms(chain, 0.1, 6000), InvalidArgument);
}

TEST(BoundedProbe, ContractingSystemIsBounded) {
  const auto sys = minus_identity();
  const auto r = bounded_support_probe(sys, 100000, 10, 4);
  EXPECT_TRUE(r.bounded);
  EXPECT_EQ(r.verdict, "bounded");
  EXPECT_LE(r.checkpoints.back().running_max, 1.0 + 1e-15);
  EXPECT_EQ(r.checkpoints.back().step, 100000);
  for (std::size_t i = 1; i < r.checkpoints.size(); ++i) {
    EXPECT_GT(r.checkpoints[i].step, r.checkpoints[i - 1].step);
    EXPECT_GE(r.checkpoints[i].running_max, r.checkpoints[i - 1].running_max);
  }
  EXPECT_TRUE(std::isfinite(r.apriori_radius));
  EXPECT_GE(r.apriori_radius, 1.0);
}

TEST(BoundedProbe, HeavySystemKeepsGrowing) {
  const auto sys = planar_decentered(make_params(0.15, 3.0, 0.3, 0.5), {1.0, 0.0}, {-1.0, 0.0});
  const auto r = bounded_support_probe(sys, 200000, 10, 4);
  EXPECT_FALSE(r.bounded);
  EXPECT_GT(r.increase_second_half, 1e-6);
}

TEST(Coupling, DecenteredContraction) {
  const auto sys = planar_decentered(make_params(0.15, 3.0, 1.0, 0.5), {1.0, 0.0}, {-1.0, 0.0});
  const auto env = hurwitz_envelope(sys);
  const auto r = coupling_contraction_check(sys, env, 1.0, 4.0, 2000, 3);
  EXPECT_TRUE(r.holds) << r.empirical << " vs " << r.analytic;
}

TEST(TailMethod, Names) {
  EXPECT_EQ(to_string(TailMethod::MomentRoot), "moment-root");
  EXPECT_EQ(to_string(TailMethod::MomentIncrement), "moment-increment");
  EXPECT_EQ(to_string(TailMethod::Hill), "hill");
}
