#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdebias/estimators.hpp"
#include "spdebias/lp_core.hpp"
#include "spdebias/market.hpp"
#include "spdebias/stats.hpp"

namespace spdebias {

enum class Execution { Serial, Parallel };

ExperimentDraw draw_experiment(const MarketRates& rates, double tau, double rho,
                               std::uint64_t seed);

/// Blind split of the matched units: per demand type the control labels are
/// a uniformly random subset of the experiment units, which are grouped into
/// matched-to-j and unmatched categories.
MatchSplit split_matches(const MatchingInstance& inst, const Vector& x_total,
                         const CountVector& D_control, const CountVector& D_experiment,
                         std::uint64_t seed);

struct EstimateRecord {
  double tau = 0.0;
  double rho = 0.0;
  std::uint64_t seed = 0;
  double delta_rct_raw = 0.0;
  double delta_rct_rb = 0.0;
  double delta_sp = 0.0;
  double phi_scaled = 0.0;  // Phi(D_experiment, S) / tau
  bool degenerate = false;
};

EstimateRecord run_cycle(const MatchingInstance& inst, const MarketRates& rates, double tau,
                         double rho, std::uint64_t seed);

struct GteEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> samples;
};

/// Paired global-treatment / global-control replications sharing the supply
/// draw; treated demand is coupled to control demand so beta = 0 gives 0.
GteEstimate simulate_gte(const MarketRates& rates, const MatchingInstance& inst, double tau,
                         std::size_t replications, std::uint64_t seed,
                         Execution execution = Execution::Parallel);

struct SimConfig {
  MatchingInstance inst;
  MarketRates rates;
  Vector taus;
  double rho = 0.5;
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  bool estimate_gte = true;
};

struct MonteCarloRow {
  double tau = 0.0;
  Moments rct_raw;
  Moments rct_rb;
  Moments sp;
  Moments phi_scaled;
  double var_sqrt_tau_rct_raw = 0.0;  // Var(sqrt(tau) * estimate)
  double var_sqrt_tau_rct_rb = 0.0;
  double var_sqrt_tau_sp = 0.0;
  Moments gte;  // n = 0 when not requested
  std::size_t degenerate_count = 0;
};

struct MonteCarloStats {
  std::vector<MonteCarloRow> rows;
  std::vector<EstimateRecord> records;  // tau-major, replication-minor
};

MonteCarloStats monte_carlo(const SimConfig& config, Execution execution = Execution::Parallel);

struct ScalingRow {
  std::string direction;  // "oversupply" or "undersupply"
  double factor = 1.0;
  EstimateReport report;
};

std::vector<ScalingRow> supply_scaling_sweep(const MatchingInstance& inst,
                                             const MarketRates& rates, const Vector& factors,
                                             double rho);

}  // namespace spdebias
