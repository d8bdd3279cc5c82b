#pragma once

#include <cstddef>
#include <vector>

#include "spdebias/common.hpp"
#include "spdebias/network_simplex.hpp"

namespace spdebias {

struct MatchEdge {
  int i = 0;  // demand type
  int j = 0;  // supply type
  double v = 0.0;
};

/// Bipartite market structure. Only admissible pairs are stored; an absent
/// pair is an excluded variable, never a large negative value.
class MatchingInstance {
 public:
  MatchingInstance() = default;
  MatchingInstance(int n_d, int n_s, std::vector<MatchEdge> edges);
  /// Dense value matrix; `mask` (same shape, nonzero = admissible) is optional.
  explicit MatchingInstance(const Matrix& v, const Matrix* mask = nullptr);

  int n_d() const noexcept { return n_d_; }
  int n_s() const noexcept { return n_s_; }
  const std::vector<MatchEdge>& edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  /// Index of edge (i, j) or -1 when the pair is not admissible.
  int find_edge(int i, int j) const;
  /// Edges of demand type i occupy [row_begin(i), row_begin(i+1)).
  std::size_t row_begin(int i) const { return row_start_[i]; }
  bool demand_isolated(int i) const { return row_start_[i] == row_start_[i + 1]; }
  bool supply_isolated(int j) const { return supply_degree_[j] == 0; }
  double max_abs_value() const noexcept { return max_abs_value_; }

  Matrix dense_values() const;

 private:
  void finalize();

  int n_d_ = 0;
  int n_s_ = 0;
  std::vector<MatchEdge> edges_;  // sorted by (i, j)
  std::vector<std::size_t> row_start_;
  std::vector<int> supply_degree_;
  double max_abs_value_ = 0.0;
};

struct SolveResult {
  Vector x;  // one entry per instance edge (matching) or network edge (flow)
  Vector a;  // demand duals (matching) / retailer duals (flow)
  Vector b;  // supply duals (matching) / plant duals (flow)
  double objective = 0.0;
  bool degenerate = false;
  bool dual_unique_hint = true;
  bool primal_unique = true;
  // Flow problems only.
  Vector edge_duals;       // capacity duals alpha_e >= 0
  Vector node_potentials;  // conservation duals gamma_n, one per network node

  /// Dense n_d x n_s view of a matching solution.
  Matrix dense_x(const MatchingInstance& inst) const;
  /// Sum of x over edges leaving demand type i.
  double row_total(const MatchingInstance& inst, int i) const;
};

SolveResult solve_matching(const MatchingInstance& inst, const Vector& d, const Vector& s);

bool check_complementary_slackness(const MatchingInstance& inst, const Vector& d, const Vector& s,
                                   const SolveResult& result);

/// Fewer strictly positive x entries than tight capacity rows.
bool is_degenerate(const MatchingInstance& inst, const Vector& d, const Vector& s,
                   const SolveResult& result);

enum class NodeRole { Plant, Retailer, Internal };

struct NetworkEdge {
  int from = 0;
  int to = 0;
  double capacity = 0.0;
  double cost = 0.0;
};

struct FlowNetwork {
  std::vector<NodeRole> roles;
  std::vector<NetworkEdge> edges;
  std::vector<double> production_cost;  // per node; read for plants
  std::vector<double> price;            // per node; read for retailers

  int node_count() const { return static_cast<int>(roles.size()); }
  std::vector<int> plants() const;
  std::vector<int> retailers() const;
  /// Value per unit shipped on edge e: minus transport cost, minus production
  /// cost when leaving a plant, plus the retail price when entering a retailer.
  double edge_value(std::size_t e) const;
  /// Throws InvalidArgument unless the graph is a plant-to-retailer DAG with
  /// every internal node on some plant-retailer path.
  void validate() const;
};

/// Maximum-value flow. a: retailer duals, b: plant duals (in plants() and
/// retailers() order), edge_duals: capacity duals, node_potentials: per node.
SolveResult solve_min_cost_flow(const FlowNetwork& net, const Vector& retail_demand,
                                const Vector& plant_capacity);

}  // namespace spdebias
