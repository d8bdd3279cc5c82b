#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace spdebias {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct FlowArc {
  int source = 0;
  int target = 0;
  double capacity = kUnbounded;
  double cost = 0.0;
};

/// Balanced min-cost flow problem: node supplies must sum to zero.
struct FlowProblem {
  int node_count = 0;
  std::vector<double> supply;
  std::vector<FlowArc> arcs;

  int add_arc(int source, int target, double capacity, double cost);
};

enum class FlowStatus { Optimal, Infeasible, Unbounded, PivotLimit };

/// Optimal flow and node potentials. Potentials follow the convention
/// reduced_cost(e) = cost(e) + potential(source) - potential(target); at the
/// optimum arcs with zero flow have reduced cost >= 0, saturated arcs <= 0 and
/// arcs strictly between bounds exactly 0.
struct FlowSolution {
  FlowStatus status = FlowStatus::Infeasible;
  std::vector<double> flow;
  std::vector<double> potential;
  std::vector<bool> basic;  // arc is in the final spanning tree
  double cost = 0.0;
  // The final basis has a basic arc at one of its bounds, or the real arcs of
  // the basis do not span the graph.
  bool degenerate = false;
  std::size_t pivots = 0;
};

struct NetworkSimplexOptions {
  std::size_t max_pivots = 0;  // 0 selects a limit proportional to problem size
};

/// Primal network simplex with block-search pivoting over strongly feasible
/// spanning trees. Ties are broken by arc index, so the result is a pure
/// function of the input.
FlowSolution solve_network_simplex(const FlowProblem& problem,
                                   const NetworkSimplexOptions& options = {});

double reduced_cost(const FlowProblem& problem, const FlowSolution& solution,
                    std::size_t arc);

/// True when the optimal flow is the only optimal flow: no circulation can be
/// pushed through arcs with zero reduced cost. `tol` bounds what counts as a
/// zero reduced cost and as residual capacity.
bool has_unique_optimal_flow(const FlowProblem& problem, const FlowSolution& solution,
                             double tol);

}  // namespace spdebias
