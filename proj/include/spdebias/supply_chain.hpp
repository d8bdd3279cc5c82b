#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdebias/lp_core.hpp"
#include "spdebias/stats.hpp"
#include "spdebias/stochastic_sim.hpp"

namespace spdebias {

/// Node ids of the example network.
namespace sc_node {
inline constexpr int p1 = 0;
inline constexpr int p2 = 1;
inline constexpr int w1 = 2;  // w1..w10 are 2..11
inline constexpr int r1 = 12;
inline constexpr int r2 = 13;
}  // namespace sc_node

/// Two plants, two warehouse layers of five nodes, two retailers. Capacities
/// Poisson(80) and costs U[0,5] drawn from the seed.
FlowNetwork build_example_network(std::uint64_t seed);

struct FlowPath {
  std::vector<std::size_t> edges;  // plant to retailer
  double amount = 0.0;
  double value = 0.0;  // per unit, sum of edge values
  int retailer = 0;    // position in net.retailers()
};

/// Greedy path peeling: retailers in order, each path built backwards along
/// the lowest-index incoming edge with remaining flow.
std::vector<FlowPath> decompose_flow(const FlowNetwork& net, const Vector& x);

/// Value of the flow attributed to each retailer through its paths.
Vector retailer_values(const FlowNetwork& net, const Vector& x);

enum class SupplyRegime { Undersupply, Oversupply, Custom };

std::string to_string(SupplyRegime regime);
SupplyRegime parse_regime(const std::string& name);

struct SupplyChainConfig {
  Vector lambda{130.0, 120.0};
  Vector beta{10.0, 10.0};
  Vector pi{130.0, 190.0};
  double rho = 0.5;
  std::size_t replications = 1000;
  std::uint64_t seed = 1;
  std::uint64_t network_seed = 2;
  SupplyRegime regime = SupplyRegime::Undersupply;

  static SupplyChainConfig for_regime(SupplyRegime regime);
  void validate() const;
};

/// Grid of treatment effects studied per regime.
std::vector<Vector> supply_chain_beta_grid();

struct SupplyChainReplication {
  double delta_true = 0.0;
  double delta_rct = 0.0;      // average retailer value times demand difference
  double delta_rct_raw = 0.0;  // split of served units
  double delta_sp = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
};

struct SupplyChainReport {
  Vector beta;
  SupplyRegime regime = SupplyRegime::Custom;
  Moments delta_true;
  Moments delta_rct;
  Moments delta_rct_raw;
  Moments delta_sp;
  std::vector<SupplyChainReplication> runs;
};

SupplyChainReport run_supply_chain_experiment(const SupplyChainConfig& config,
                                              Execution execution = Execution::Parallel);

SupplyChainReport run_supply_chain_on_network(const FlowNetwork& net,
                                              const SupplyChainConfig& config,
                                              Execution execution = Execution::Parallel);

}  // namespace spdebias
