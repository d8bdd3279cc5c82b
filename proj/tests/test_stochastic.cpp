#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "spdebias/random.hpp"
#include "spdebias/stats.hpp"
#include "spdebias/stochastic_sim.hpp"

using namespace spdebias;

namespace {

MatchingInstance geometric() {
  return MatchingInstance(Matrix{{2.0, 1.0, 0.5, 0.25, 0.125, 0.0625}});
}

MarketRates geometric_rates() {
  MarketRates r;
  r.lambda = {1.5};
  r.beta = {4.0};
  r.pi = Vector(6, 1.0);
  return r;
}

}  // namespace

TEST(Random, ChildSeedsAreStableAndDistinct) {
  EXPECT_EQ(child_seed(42, {1, 2}), child_seed(42, {1, 2}));
  EXPECT_NE(child_seed(42, {1, 2}), child_seed(42, {2, 1}));
  EXPECT_NE(child_seed(42, {1}), child_seed(43, {1}));
}

TEST(Random, HypergeometricRespectsTotals) {
  Rng rng = make_rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const CountVector sizes = {3, 0, 5, 2};
    const CountVector picked = multivariate_hypergeometric(rng, sizes, 6);
    EXPECT_EQ(std::accumulate(picked.begin(), picked.end(), std::int64_t{0}), 6);
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      EXPECT_GE(picked[k], 0);
      EXPECT_LE(picked[k], sizes[k]);
    }
  }
  EXPECT_THROW(multivariate_hypergeometric(rng, {1, 1}, 3), Error);
}

TEST(Stats, MomentsAndUndefinedVariance) {
  const Moments m = moments({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.variance, 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.std_error, std::sqrt(5.0 / 3.0 / 4.0));
  const Moments one = moments({7.0});
  EXPECT_EQ(one.mean, 7.0);
  EXPECT_TRUE(std::isnan(one.variance));
  EXPECT_DOUBLE_EQ(compensated_sum({1e16, 1.0, -1e16}), 1.0);
}

TEST(DrawExperiment, ZeroRatesAndDeterminism) {
  MarketRates zero;
  zero.lambda = {0.0, 0.0};
  zero.beta = {0.0, 0.0};
  zero.pi = {0.0};
  const ExperimentDraw d = draw_experiment(zero, 100.0, 0.5, 1);
  for (auto c : d.D_control) EXPECT_EQ(c, 0);
  for (auto c : d.D_treatment) EXPECT_EQ(c, 0);
  const ExperimentDraw a = draw_experiment(geometric_rates(), 50.0, 0.5, 42);
  const ExperimentDraw b = draw_experiment(geometric_rates(), 50.0, 0.5, 42);
  EXPECT_EQ(a.D_control, b.D_control);
  EXPECT_EQ(a.D_treatment, b.D_treatment);
  EXPECT_EQ(a.S, b.S);
}

TEST(DrawExperiment, ConcentratesAtRates) {
  MarketRates r;
  r.lambda = {1.0};
  r.beta = {1.0};
  r.pi = {1.0};
  const double tau = 1e4;
  const ExperimentDraw d = draw_experiment(r, tau, 0.5, 9);
  EXPECT_NEAR(d.D_control[0] / tau, 0.5, 5.0 * std::sqrt(0.5 * tau) / tau);
  EXPECT_NEAR(d.D_treatment[0] / tau, 1.0, 5.0 * std::sqrt(tau) / tau);
}

TEST(SplitMatches, BoundaryCases) {
  const MatchingInstance inst(Matrix{{1.0, 2.0}});
  const Vector x = {1.0, 2.0};
  const MatchSplit none = split_matches(inst, x, {0}, {4}, 1);
  EXPECT_EQ(none.X_control, Vector({0.0, 0.0}));
  EXPECT_EQ(none.X_treatment, x);
  const MatchSplit all = split_matches(inst, x, {4}, {4}, 1);
  EXPECT_EQ(all.X_control, x);
  try {
    split_matches(inst, {3.0, 2.0}, {1}, {4}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InconsistentCounts);
  }
}

TEST(SplitMatches, BlindSplitHasProportionalMean) {
  const MatchingInstance inst(Matrix{{1.0}});
  const int n = 100000;
  std::vector<double> draws;
  draws.reserve(n);
  for (int k = 0; k < n; ++k) {
    draws.push_back(split_matches(inst, {2.0}, {2}, {4}, child_seed(77, {std::uint64_t(k)})).X_control[0]);
  }
  const Moments m = moments(draws);
  EXPECT_NEAR(m.mean, 1.0, 3.0 * m.std_error);
}

TEST(RunCycle, FixedSeedIsBitIdentical) {
  const EstimateRecord a = run_cycle(geometric(), geometric_rates(), 100.0, 0.5, 123);
  const EstimateRecord b = run_cycle(geometric(), geometric_rates(), 100.0, 0.5, 123);
  EXPECT_EQ(a.delta_rct_raw, b.delta_rct_raw);
  EXPECT_EQ(a.delta_rct_rb, b.delta_rct_rb);
  EXPECT_EQ(a.delta_sp, b.delta_sp);
}

TEST(MonteCarlo, ConvergesToFluidValues) {
  SimConfig c;
  c.inst = geometric();
  c.rates = geometric_rates();
  c.taus = {1000.0};
  c.replications = 200;
  c.seed = 7;
  const MonteCarloStats s = monte_carlo(c);
  const MonteCarloRow& row = s.rows[0];
  EXPECT_NEAR(row.sp.mean, 1.0, 3.0 * row.sp.std_error);
  EXPECT_NEAR(row.rct_rb.mean, 29.0 / 7.0, 3.0 * row.rct_rb.std_error);
  EXPECT_NEAR(row.gte.mean, 1.40625, 3.0 * row.gte.std_error);
}

TEST(MonteCarlo, ZeroEffectHasZeroMeanEstimates) {
  SimConfig c;
  c.inst = geometric();
  c.rates = geometric_rates();
  c.rates.beta = {0.0};
  c.taus = {100.0};
  c.replications = 300;
  const MonteCarloStats s = monte_carlo(c);
  const MonteCarloRow& row = s.rows[0];
  EXPECT_NEAR(row.sp.mean, 0.0, 3.0 * row.sp.std_error);
  EXPECT_NEAR(row.rct_rb.mean, 0.0, 3.0 * row.rct_rb.std_error);
  EXPECT_EQ(row.gte.mean, 0.0);
}

TEST(MonteCarlo, SerialAndParallelAreIdentical) {
  SimConfig c;
  c.inst = geometric();
  c.rates = geometric_rates();
  c.taus = {10.0, 100.0};
  c.replications = 64;
  const MonteCarloStats p = monte_carlo(c, Execution::Parallel);
  const MonteCarloStats s = monte_carlo(c, Execution::Serial);
  ASSERT_EQ(p.records.size(), s.records.size());
  for (std::size_t k = 0; k < p.records.size(); ++k) {
    EXPECT_EQ(p.records[k].delta_rct_raw, s.records[k].delta_rct_raw);
    EXPECT_EQ(p.records[k].delta_rct_rb, s.records[k].delta_rct_rb);
    EXPECT_EQ(p.records[k].delta_sp, s.records[k].delta_sp);
  }
  for (std::size_t t = 0; t < p.rows.size(); ++t) {
    EXPECT_EQ(p.rows[t].sp.mean, s.rows[t].sp.mean);
    EXPECT_EQ(p.rows[t].sp.variance, s.rows[t].sp.variance);
    EXPECT_EQ(p.rows[t].gte.mean, s.rows[t].gte.mean);
  }
}

TEST(MonteCarlo, SingleReplicationHasUndefinedVariance) {
  SimConfig c;
  c.inst = geometric();
  c.rates = geometric_rates();
  c.taus = {10.0};
  c.replications = 1;
  c.estimate_gte = false;
  const MonteCarloStats s = monte_carlo(c);
  EXPECT_TRUE(std::isnan(s.rows[0].sp.variance));
  EXPECT_EQ(s.rows[0].gte.n, 0u);
}

TEST(SimulateGte, ZeroEffectIsExactlyZero) {
  MarketRates r = geometric_rates();
  r.beta = {0.0};
  const GteEstimate g = simulate_gte(r, geometric(), 100.0, 50, 3);
  for (double x : g.samples) EXPECT_EQ(x, 0.0);
}

TEST(SupplyScaling, LimitsOfImbalancedMarkets) {
  const std::vector<ScalingRow> rows =
      supply_scaling_sweep(geometric(), geometric_rates(), {1.0, 1000.0}, 0.5);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NEAR(rows[0].report.delta_true, 1.40625, 1e-12);
  EXPECT_LT(rows[2].report.bias_rct, 1e-6);
  EXPECT_LT(rows[2].report.bias_sp, 1e-6);
  EXPECT_EQ(rows[3].direction, "undersupply");
  EXPECT_LT(rows[3].report.bias_sp, 1e-6);
  EXPECT_GT(rows[3].report.bias_rct, 1e-2);
}
