#include <gtest/gtest.h>

#include <cmath>

#include "oracle/oracles.hpp"
#include "spdebias/market.hpp"
#include "support/generators.hpp"

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

MatchingInstance single_edge() { return MatchingInstance(Matrix{{1.0}}); }

MarketRates counter_rates() {
  MarketRates r;
  r.lambda = {0.0};
  r.beta = {1.0};
  r.pi = {0.625};
  return r;
}

}  // namespace

TEST(Phi, GeometricValuesMatchGreedyFill) {
  const Vector v = {2.0, 1.0, 0.5, 0.25, 0.125, 0.0625}, s(6, 1.0);
  for (double d : {0.0, 1.5, 3.5, 5.5}) {
    EXPECT_NEAR(phi(geometric(), {d}, s), oracle::greedy_fill(v, s, d), 1e-12);
  }
  EXPECT_DOUBLE_EQ(phi(geometric(), {1.5}, s), 2.5);
  EXPECT_DOUBLE_EQ(phi(geometric(), {5.5}, s), 3.90625);
  EXPECT_DOUBLE_EQ(phi(geometric(), {0.0}, s), 0.0);
}

TEST(Psi, GeometricValues) {
  EXPECT_DOUBLE_EQ(psi(geometric(), geometric_rates(), 0.0), 2.5);
  EXPECT_DOUBLE_EQ(psi(geometric(), geometric_rates(), 0.5), 3.625);
  EXPECT_DOUBLE_EQ(psi(geometric(), geometric_rates(), 1.0), 3.90625);
}

TEST(Psi, RejectsEtaOutsideUnitInterval) {
  try {
    psi(geometric(), geometric_rates(), 1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
  }
}

TEST(MarketRates, IntentDecompositionAndSignConsistency) {
  const MarketRates r = MarketRates::from_intent({10.0, 4.0}, {0.2, 0.5}, {0.1, -0.25}, {1.0});
  EXPECT_NEAR(r.lambda[0], 2.0, 1e-15);
  EXPECT_NEAR(r.beta[1], -1.0, 1e-15);
  EXPECT_FALSE(r.sign_consistent());
  EXPECT_TRUE(geometric_rates().sign_consistent());
}

TEST(MarketRates, RejectsNegativeTreatedDemand) {
  MarketRates r = geometric_rates();
  r.beta = {-2.0};
  EXPECT_THROW(r.validate(geometric()), Error);
}

TEST(PsiProfile, GeometricBreakpointsAndSlopes) {
  const PsiProfile p = build_psi_profile(geometric(), geometric_rates(), 1e-9);
  const Vector eta = {0.0, 0.125, 0.375, 0.625, 0.875, 1.0};
  const Vector slope = {4.0, 2.0, 1.0, 0.5, 0.25};
  ASSERT_EQ(p.breakpoints.size(), eta.size());
  for (std::size_t k = 0; k < eta.size(); ++k) EXPECT_NEAR(p.breakpoints[k], eta[k], 1e-9);
  for (std::size_t k = 0; k < slope.size(); ++k) EXPECT_NEAR(p.slopes[k], slope[k], 1e-9);
  EXPECT_NEAR(p.values.back(), 3.90625, 1e-12);
}

TEST(PsiProfile, ZeroEffectIsOneFlatSegment) {
  MarketRates r = geometric_rates();
  r.beta = {0.0};
  const PsiProfile p = build_psi_profile(geometric(), r, 1e-9);
  ASSERT_EQ(p.slopes.size(), 1u);
  EXPECT_EQ(p.slopes[0], 0.0);
}

TEST(PsiProfile, CounterExampleHasOneKink) {
  const PsiProfile p = build_psi_profile(single_edge(), counter_rates(), 1e-9);
  ASSERT_EQ(p.breakpoints.size(), 3u);
  EXPECT_NEAR(p.breakpoints[1], 0.625, 1e-9);
  EXPECT_NEAR(p.slopes[0], 1.0, 1e-9);
  EXPECT_NEAR(p.slopes[1], 0.0, 1e-9);
}

TEST(Gte, FluidAndIntegralForms) {
  EXPECT_NEAR(gte_fluid(geometric(), geometric_rates()), 1.40625, 1e-12);
  EXPECT_NEAR(gte_fluid(single_edge(), counter_rates()), 0.625, 1e-12);
  MarketRates zero = geometric_rates();
  zero.beta = {0.0};
  EXPECT_EQ(gte_fluid(geometric(), zero), 0.0);
  EXPECT_NEAR(gte_via_integral(build_psi_profile(geometric(), geometric_rates(), 1e-9)), 1.40625,
              2e-9);
  EXPECT_NEAR(gte_via_integral(build_psi_profile(single_edge(), counter_rates(), 1e-9)), 0.625,
              2e-9);
  PsiProfile line;
  line.breakpoints = {0.0, 1.0};
  line.values = {0.0, 3.0};
  line.slopes = {3.0};
  EXPECT_DOUBLE_EQ(gte_via_integral(line), 3.0);
}

TEST(PsiProfile, RandomInstancesAreConcaveContinuousAndExact) {
  gen::Gen g(200);
  int built = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n_d = g.integer(1, 5), n_s = g.integer(1, 5);
    const MatchingInstance inst = g.instance(n_d, n_s, 0.0, 10.0, 0.8);
    const MarketRates rates = g.rates(n_d, n_s);
    const double tol = 1e-9;
    PsiProfile p;
    try {
      p = build_psi_profile(inst, rates, tol);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::MaxDepthExceeded);
      continue;
    }
    ++built;
    const double scale = tolerance_scale(p.values.back());
    for (std::size_t k = 1; k < p.slopes.size(); ++k) {
      ASSERT_LE(p.slopes[k], p.slopes[k - 1] + kDualTol * scale);
    }
    for (std::size_t k = 0; k + 1 < p.breakpoints.size(); ++k) {
      ASSERT_NEAR(p.values[k + 1],
                  p.values[k] + p.slopes[k] * (p.breakpoints[k + 1] - p.breakpoints[k]),
                  kDualTol * scale);
    }
    for (int probe = 0; probe < 5; ++probe) {
      const double eta = g.real(0.0, 1.0);
      ASSERT_NEAR(profile_value(p, eta),
                  oracle::matching_value(inst, rates.demand_at(eta), rates.pi),
                  kDualTol * scale);
    }
    ASSERT_NEAR(gte_via_integral(p), gte_fluid(inst, rates), 2 * tol * scale);
  }
  EXPECT_GE(built, 190);
}

TEST(MarginalValues, TwoByOneLeftAndRight) {
  const MatchingInstance inst(Matrix{{2.0}, {1.0}});
  const MarginalValues left = marginal_values(inst, {1.0, 1.0}, {1.0}, Direction::Left);
  EXPECT_DOUBLE_EQ(left.values[0], 1.0);
  EXPECT_DOUBLE_EQ(left.values[1], 0.0);
  const MarginalValues right = marginal_values(inst, {1.0, 1.0}, {1.0}, Direction::Right);
  EXPECT_DOUBLE_EQ(right.values[0], 0.0);
  EXPECT_DOUBLE_EQ(right.values[1], 0.0);
}

TEST(MarginalValues, OversupplyGivesBestEdgeValue) {
  const MatchingInstance inst(Matrix{{3.0, 5.0}, {4.0, 1.0}});
  const MarginalValues right = marginal_values(inst, {1.0, 2.0}, {100.0, 100.0}, Direction::Right);
  EXPECT_DOUBLE_EQ(right.values[0], 5.0);
  EXPECT_DOUBLE_EQ(right.values[1], 4.0);
}

TEST(MarginalValues, LeftFallsBackToRightBelowOneUnit) {
  const MatchingInstance inst(Matrix{{2.0}, {1.0}});
  const MarginalValues left = marginal_values(inst, {0.5, 1.0}, {1.0}, Direction::Left);
  EXPECT_TRUE(left.right_fallback[0]);
  EXPECT_FALSE(left.right_fallback[1]);
}

TEST(MarginalValues, DualsAgreeWithBruteForceWhenUnique) {
  gen::Gen g(31);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const MatchingInstance inst = g.instance(g.integer(1, 5), g.integer(1, 5), 0.0, 10.0);
    const Vector d = g.integers(inst.n_d(), 0, 5), s = g.integers(inst.n_s(), 0, 5);
    if (!solve_matching(inst, d, s).dual_unique_hint) continue;
    ++compared;
    const Vector brute = oracle::marginal_bruteforce(inst, d, s, false);
    const MarginalValues via =
        marginal_values(inst, d, s, Direction::Right, MarginalMethod::Duals);
    for (std::size_t i = 0; i < brute.size(); ++i) {
      ASSERT_NEAR(via.values[i], brute[i], kDualTol * tolerance_scale(brute[i]));
    }
  }
  EXPECT_GT(compared, 20);
}

TEST(LocalLinearity, BothDirectionsOnIntegralPoints) {
  gen::Gen g(41);
  for (int trial = 0; trial < 200; ++trial) {
    const MatchingInstance inst = g.instance(g.integer(1, 5), g.integer(1, 5), 0.0, 10.0);
    const Vector d = g.integers(inst.n_d(), 1, 5), s = g.integers(inst.n_s(), 0, 5);
    Vector eps = g.reals(inst.n_d(), 0.0, 1.0);
    double total = 0.0;
    for (double e : eps) total += e;
    for (double& e : eps) e /= std::max(1.0, total);
    const double base = oracle::matching_value(inst, d, s);
    const Vector right = oracle::marginal_bruteforce(inst, d, s, false);
    const Vector left = oracle::marginal_bruteforce(inst, d, s, true);
    Vector up = d, down = d;
    double up_pred = base, down_pred = base;
    for (std::size_t i = 0; i < d.size(); ++i) {
      up[i] += eps[i];
      down[i] -= eps[i];
      up_pred += eps[i] * right[i];
      down_pred -= eps[i] * left[i];
    }
    const double scale = tolerance_scale(base);
    ASSERT_NEAR(phi(inst, up, s), up_pred, kDualTol * scale);
    ASSERT_NEAR(phi(inst, down, s), down_pred, kDualTol * scale);
  }
}

TEST(PerturbDemand, ShiftsUnitDemandAndRecoversLeftDuals) {
  const MatchingInstance inst(Matrix{{2.0}, {1.0}});
  const Vector d = perturb_demand({1.0, 1.0}, 0.25);
  EXPECT_DOUBLE_EQ(d[0], 0.75);
  EXPECT_DOUBLE_EQ(d[1], 0.75);
  const SolveResult r = solve_matching(inst, d, {1.0});
  EXPECT_NEAR(r.a[0], 1.0, 1e-12);
  EXPECT_NEAR(r.a[1], 0.0, 1e-12);
}

TEST(PerturbDemand, RejectsEpsilonOutsideOpenInterval) {
  for (double eps : {0.0, 0.5, -0.1}) {
    try {
      perturb_demand({1.0, 1.0}, eps);
      FAIL() << eps;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::EpsilonOutOfRange);
    }
  }
  EXPECT_THROW(perturb_demand({1.0, 2.0}, 0.1), Error);
}

TEST(PerturbDemand, DualsStableAcrossEpsilonAndEqualLeftMarginals) {
  gen::Gen g(51);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = g.integer(2, 12);
    const MatchingInstance inst = g.instance(n, g.integer(1, 12), 0.0, 10.0, 0.5);
    const Vector ones(n, 1.0), s(inst.n_s(), 1.0);
    const Vector left = oracle::marginal_bruteforce(inst, ones, s, true);
    for (double f : {0.1, 0.5, 0.9}) {
      const SolveResult r = solve_matching(inst, perturb_demand(ones, f / n), s);
      EXPECT_FALSE(r.degenerate);
      for (int i = 0; i < n; ++i) ASSERT_NEAR(r.a[i], left[i], kDualTol * 10.0);
    }
  }
}
