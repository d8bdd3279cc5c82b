#pragma once

#include <cstdint>
#include <vector>

#include "spdebias/common.hpp"
#include "spdebias/lp_core.hpp"
#include "spdebias/market.hpp"

namespace spdebias {

/// One simulated matching cycle at scale tau with treatment fraction rho.
struct ExperimentDraw {
  double tau = 1.0;
  double rho = 0.5;
  CountVector D_control;
  CountVector D_treatment;
  CountVector S;
  std::uint64_t seed = 0;

  CountVector D_experiment() const;
};

/// Matched units by group, aligned with the instance edge list.
struct MatchSplit {
  Vector X_control;
  Vector X_treatment;
};

struct EstimateReport {
  double delta_true = 0.0;
  double delta_rct = 0.0;
  double delta_sp = 0.0;
  double bias_rct = 0.0;
  double bias_sp = 0.0;
  Vector vbar;  // average value per unit of experiment demand, per type
  Vector a;     // demand duals at the experiment point
  bool degenerate = false;
  bool breakpoint_ambiguous = false;  // delta_sp and bias_sp are NaN when set
  bool sign_consistent = true;
  bool symmetric = false;  // rho == 0.5
  std::vector<bool> zero_demand_type;
};

struct FluidEstimate {
  double value = 0.0;
  bool degenerate = false;
  Vector per_type;  // vbar for RCT, duals a for SP
  std::vector<bool> zero_demand_type;
};

/// v̄ . beta with v̄_i = sum_j x_ij v_ij / (lambda_i + rho beta_i) at the
/// experiment point.
FluidEstimate rct_estimate_fluid(const MatchingInstance& inst, const MarketRates& rates,
                                 double rho);
/// a^rho . beta. Throws BreakpointAmbiguity when rho sits on a kink of Psi.
FluidEstimate sp_estimate_fluid(const MatchingInstance& inst, const MarketRates& rates,
                                double rho);

double rct_estimate_sample(const ExperimentDraw& draw, const MatchSplit& split,
                           const MatchingInstance& inst);
/// Conditional expectation of the sampled RCT estimate over the blind
/// control/treatment split of matched units.
double rct_estimate_sample_rb(const ExperimentDraw& draw, const Vector& x_total,
                              const MatchingInstance& inst);
double sp_estimate_sample(const ExperimentDraw& draw, const Vector& duals_a);

EstimateReport bias_report(const MatchingInstance& inst, const MarketRates& rates, double rho);

/// Expected SP estimate when rho ~ Uniform(0, 1): the integral of Psi'.
double expected_sp_uniform_rho(const PsiProfile& profile, const MarketRates& rates);

}  // namespace spdebias
