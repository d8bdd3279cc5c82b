#include <gtest/gtest.h>

#include "spdebias/secondary.hpp"
#include "support/generators.hpp"

using namespace spdebias;

namespace {

MatchingInstance two_by_one() { return MatchingInstance(Matrix{{2.0}, {1.0}}); }

SecondaryMetric example_w(const MatchingInstance& inst) {
  return SecondaryMetric::from_dense(inst, Matrix{{0.0}, {5.0}});
}

}  // namespace

TEST(Secondary, PhiOfSelfMetricIsPrimaryValue) {
  const MatchingInstance inst = two_by_one();
  EXPECT_DOUBLE_EQ(phi_secondary(inst, SecondaryMetric::primary(inst), {2.0, 2.0}, {3.0}), 5.0);
  EXPECT_DOUBLE_EQ(phi_secondary(inst, example_w(inst), {2.0, 2.0}, {3.0}), 5.0);
  SecondaryMetric zero;
  zero.w = {0.0, 0.0};
  EXPECT_DOUBLE_EQ(phi_secondary(inst, zero, {2.0, 2.0}, {3.0}), 0.0);
}

TEST(Secondary, NonUniquePrimalIsRejected) {
  const MatchingInstance inst(Matrix{{1.0, 1.0}});
  SecondaryMetric w;
  w.w = {1.0, 0.0};
  try {
    phi_secondary(inst, w, {1.0}, {1.0, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonUniquePrimal);
  }
}

TEST(Secondary, BruteForceAndComplementarySlacknessOnExample) {
  const MatchingInstance inst = two_by_one();
  const SecondaryDuals brute = secondary_duals_bruteforce(inst, example_w(inst), {2.0, 2.0}, {3.0});
  EXPECT_NEAR(brute.a_w[0], -5.0, 1e-12);
  EXPECT_NEAR(brute.a_w[1], 0.0, 1e-12);
  const SecondaryDuals cs = secondary_duals_cs(inst, example_w(inst), {2.0, 2.0}, {3.0});
  EXPECT_NEAR(cs.a_w[0], -5.0, 1e-12);
  EXPECT_NEAR(cs.a_w[1], 0.0, 1e-12);
  const SecondaryDuals self =
      secondary_duals_cs(inst, SecondaryMetric::primary(inst), {2.0, 2.0}, {3.0});
  EXPECT_NEAR(self.a_w[0], 1.0, 1e-12);
  EXPECT_NEAR(self.a_w[1], 0.0, 1e-12);
  SecondaryMetric zero;
  zero.w = {0.0, 0.0};
  const SecondaryDuals z = secondary_duals_bruteforce(inst, zero, {2.0, 2.0}, {3.0});
  EXPECT_EQ(z.a_w[0], 0.0);
  EXPECT_EQ(z.a_w[1], 0.0);
}

TEST(Secondary, DegeneratePrimalIsRejectedByLinearSystem) {
  const MatchingInstance inst(Matrix{{3.0, 1.0}, {1.0, 3.0}});
  try {
    secondary_duals_cs(inst, SecondaryMetric::primary(inst), {1.0, 1.0}, {1.0, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePrimal);
  }
  const SecondaryDuals fallback =
      secondary_duals(inst, SecondaryMetric::primary(inst), {1.0, 1.0}, {1.0, 1.0});
  EXPECT_NEAR(fallback.a_w[0], 3.0, 1e-12);
}

TEST(Secondary, EstimatorArithmetic) {
  const MatchingInstance inst(Matrix{{1.0}});
  ExperimentDraw draw;
  draw.tau = 1.0;
  draw.rho = 0.5;
  draw.D_control = {1};
  draw.D_treatment = {2};
  MatchSplit split;
  split.X_control = {1.0};
  split.X_treatment = {2.0};
  SecondaryMetric w;
  w.w = {3.0};
  const SecondaryEstimates est = secondary_estimates(draw, split, {{-5.0}}, inst, w);
  EXPECT_DOUBLE_EQ(est.sp_w, -10.0);
  EXPECT_DOUBLE_EQ(est.rct_w, 3.0 * (4.0 - 2.0));
  draw.D_treatment = {1};
  EXPECT_DOUBLE_EQ(secondary_estimates(draw, split, {{-5.0}}, inst, w).sp_w, 0.0);
}

TEST(Secondary, SelfMetricReproducesPrimaryEstimators) {
  const MatchingInstance inst(Matrix{{2.0, 1.0}, {1.5, 0.5}});
  ExperimentDraw draw;
  draw.tau = 2.0;
  draw.rho = 0.5;
  draw.D_control = {1, 2};
  draw.D_treatment = {2, 1};
  MatchSplit split;
  split.X_control = {1.0, 0.0, 1.0, 0.0};
  split.X_treatment = {1.0, 0.0, 0.0, 0.0};
  const Vector a = {0.5, 0.0};
  const SecondaryEstimates est =
      secondary_estimates(draw, split, {a}, inst, SecondaryMetric::primary(inst));
  EXPECT_DOUBLE_EQ(est.rct_w, rct_estimate_sample(draw, split, inst));
  EXPECT_DOUBLE_EQ(est.sp_w, sp_estimate_sample(draw, a));
}

TEST(Secondary, LinearSystemMatchesBruteForceOnRandomInstances) {
  gen::Gen g(808);
  int checked = 0;
  for (int trial = 0; checked < 200 && trial < 5000; ++trial) {
    const MatchingInstance inst = g.instance(g.integer(1, 6), g.integer(1, 6), 0.0, 10.0, 0.8);
    const Vector d = g.integers(inst.n_d(), 0, 5), s = g.integers(inst.n_s(), 0, 5);
    const SolveResult r = solve_matching(inst, d, s);
    if (r.degenerate || !r.primal_unique) continue;
    SecondaryMetric w;
    w.w = g.reals(inst.edge_count(), -5.0, 5.0);
    SecondaryDuals brute;
    try {
      brute = secondary_duals_bruteforce(inst, w, d, s);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::NonUniquePrimal);
      continue;
    }
    const SecondaryDuals cs = secondary_duals_cs(inst, w, d, s);
    for (std::size_t i = 0; i < cs.a_w.size(); ++i) ASSERT_NEAR(cs.a_w[i], brute.a_w[i], 1e-8);
    const SecondaryDuals self = secondary_duals_cs(inst, SecondaryMetric::primary(inst), d, s);
    for (std::size_t i = 0; i < self.a_w.size(); ++i) ASSERT_NEAR(self.a_w[i], r.a[i], 1e-8);
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}
