#include "spdebias/lp_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spdebias {

MatchingInstance::MatchingInstance(int n_d, int n_s, std::vector<MatchEdge> edges)
    : n_d_(n_d), n_s_(n_s), edges_(std::move(edges)) {
  finalize();
}

MatchingInstance::MatchingInstance(const Matrix& v, const Matrix* mask)
    : n_d_(static_cast<int>(v.rows())), n_s_(static_cast<int>(v.cols())) {
  if (mask != nullptr && (mask->rows() != v.rows() || mask->cols() != v.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "edge mask shape differs from value matrix");
  }
  for (int i = 0; i < n_d_; ++i) {
    for (int j = 0; j < n_s_; ++j) {
      if (mask != nullptr && (*mask)(i, j) == 0.0) continue;
      edges_.push_back({i, j, v(i, j)});
    }
  }
  finalize();
}

void MatchingInstance::finalize() {
  if (n_d_ < 1 || n_s_ < 1) {
    throw Error(ErrorCode::DimensionMismatch, "matching instance needs n_d >= 1 and n_s >= 1");
  }
  for (const MatchEdge& e : edges_) {
    if (e.i < 0 || e.i >= n_d_ || e.j < 0 || e.j >= n_s_) {
      throw Error(ErrorCode::DimensionMismatch, "edge endpoint out of range");
    }
    if (!std::isfinite(e.v)) {
      throw Error(ErrorCode::InvalidArgument, "edge value must be finite");
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const MatchEdge& l, const MatchEdge& r) {
    return l.i != r.i ? l.i < r.i : l.j < r.j;
  });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (edges_[k].i == edges_[k - 1].i && edges_[k].j == edges_[k - 1].j) {
      throw Error(ErrorCode::InvalidArgument, "duplicate edge");
    }
  }
  row_start_.assign(n_d_ + 1, 0);
  supply_degree_.assign(n_s_, 0);
  max_abs_value_ = 0.0;
  for (const MatchEdge& e : edges_) {
    ++row_start_[e.i + 1];
    ++supply_degree_[e.j];
    max_abs_value_ = std::max(max_abs_value_, std::abs(e.v));
  }
  for (int i = 0; i < n_d_; ++i) row_start_[i + 1] += row_start_[i];
}

int MatchingInstance::find_edge(int i, int j) const {
  const auto first = edges_.begin() + static_cast<std::ptrdiff_t>(row_start_[i]);
  const auto last = edges_.begin() + static_cast<std::ptrdiff_t>(row_start_[i + 1]);
  const auto it =
      std::lower_bound(first, last, j, [](const MatchEdge& e, int col) { return e.j < col; });
  if (it == last || it->j != j) return -1;
  return static_cast<int>(it - edges_.begin());
}

Matrix MatchingInstance::dense_values() const {
  Matrix out(n_d_, n_s_, 0.0);
  for (const MatchEdge& e : edges_) out(e.i, e.j) = e.v;
  return out;
}

Matrix SolveResult::dense_x(const MatchingInstance& inst) const {
  Matrix out(inst.n_d(), inst.n_s(), 0.0);
  for (std::size_t k = 0; k < inst.edge_count(); ++k) {
    out(inst.edges()[k].i, inst.edges()[k].j) = x[k];
  }
  return out;
}

double SolveResult::row_total(const MatchingInstance& inst, int i) const {
  double total = 0.0;
  for (std::size_t k = inst.row_begin(i); k < inst.row_begin(i + 1); ++k) total += x[k];
  return total;
}

namespace {

void check_nonnegative(const Vector& values, std::size_t expected, const char* what) {
  if (values.size() != expected) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has wrong length");
  }
  for (double value : values) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw Error(ErrorCode::InvalidArgument, std::string(what) + " entries must be finite and >= 0");
    }
  }
}

void require_optimal(const FlowSolution& sol) {
  switch (sol.status) {
    case FlowStatus::Optimal: return;
    case FlowStatus::PivotLimit:
      throw Error(ErrorCode::NumericalFailure, "network simplex exceeded its pivot limit");
    case FlowStatus::Infeasible:
      throw Error(ErrorCode::Infeasible, "flow problem is infeasible");
    case FlowStatus::Unbounded:
      throw Error(ErrorCode::NumericalFailure, "flow problem reported unbounded");
  }
}

}  // namespace

// Matching as a transportation flow: demand node i ships d_i either along an
// admissible edge (cost -v) or straight to the sink; supply node j forwards at
// most s_j to the sink.
SolveResult solve_matching(const MatchingInstance& inst, const Vector& d, const Vector& s) {
  const int n_d = inst.n_d();
  const int n_s = inst.n_s();
  check_nonnegative(d, n_d, "demand vector");
  check_nonnegative(s, n_s, "supply vector");

  FlowProblem problem;
  problem.node_count = n_d + n_s + 1;
  const int sink = n_d + n_s;
  problem.supply.assign(problem.node_count, 0.0);
  double total = 0.0;
  for (int i = 0; i < n_d; ++i) {
    problem.supply[i] = d[i];
    total += d[i];
  }
  problem.supply[sink] = -total;
  problem.arcs.reserve(inst.edge_count() + n_d + n_s);
  for (const MatchEdge& e : inst.edges()) problem.add_arc(e.i, n_d + e.j, kUnbounded, -e.v);
  for (int i = 0; i < n_d; ++i) problem.add_arc(i, sink, kUnbounded, 0.0);
  for (int j = 0; j < n_s; ++j) problem.add_arc(n_d + j, sink, s[j], 0.0);

  const FlowSolution sol = solve_network_simplex(problem);
  require_optimal(sol);

  SolveResult out;
  const std::size_t m = inst.edge_count();
  out.x.assign(sol.flow.begin(), sol.flow.begin() + static_cast<std::ptrdiff_t>(m));
  double objective = 0.0;
  for (std::size_t k = 0; k < m; ++k) objective += inst.edges()[k].v * out.x[k];
  out.objective = objective;
  const double pi_sink = sol.potential[sink];
  out.a.resize(n_d);
  out.b.resize(n_s);
  for (int i = 0; i < n_d; ++i) out.a[i] = std::max(0.0, sol.potential[i] - pi_sink);
  for (int j = 0; j < n_s; ++j) out.b[j] = std::max(0.0, pi_sink - sol.potential[n_d + j]);

  const double scale = tolerance_scale(objective);
  out.degenerate = is_degenerate(inst, d, s, out);
  out.dual_unique_hint = !out.degenerate;
  out.primal_unique = has_unique_optimal_flow(problem, sol, kFeasTol * scale);
  return out;
}

bool check_complementary_slackness(const MatchingInstance& inst, const Vector& d, const Vector& s,
                                   const SolveResult& result) {
  const double tol = kFeasTol * tolerance_scale(result.objective);
  const double dual_tol = kDualTol * tolerance_scale(result.objective);
  Vector col(inst.n_s(), 0.0);
  for (std::size_t k = 0; k < inst.edge_count(); ++k) {
    const MatchEdge& e = inst.edges()[k];
    col[e.j] += result.x[k];
    if (result.x[k] > tol && std::abs(result.a[e.i] + result.b[e.j] - e.v) > dual_tol) return false;
  }
  for (int i = 0; i < inst.n_d(); ++i) {
    if (result.row_total(inst, i) < d[i] - tol && std::abs(result.a[i]) > dual_tol) return false;
  }
  for (int j = 0; j < inst.n_s(); ++j) {
    if (col[j] < s[j] - tol && std::abs(result.b[j]) > dual_tol) return false;
  }
  return true;
}

bool is_degenerate(const MatchingInstance& inst, const Vector& d, const Vector& s,
                   const SolveResult& result) {
  const double tol = kFeasTol * tolerance_scale(result.objective);
  std::size_t positive = 0;
  Vector col(inst.n_s(), 0.0);
  for (std::size_t k = 0; k < inst.edge_count(); ++k) {
    if (result.x[k] > tol) ++positive;
    col[inst.edges()[k].j] += result.x[k];
  }
  std::size_t tight = 0;
  for (int i = 0; i < inst.n_d(); ++i) {
    if (result.row_total(inst, i) >= d[i] - tol) ++tight;
  }
  for (int j = 0; j < inst.n_s(); ++j) {
    if (col[j] >= s[j] - tol) ++tight;
  }
  return positive < tight;
}

std::vector<int> FlowNetwork::plants() const {
  std::vector<int> out;
  for (int n = 0; n < node_count(); ++n) {
    if (roles[n] == NodeRole::Plant) out.push_back(n);
  }
  return out;
}

std::vector<int> FlowNetwork::retailers() const {
  std::vector<int> out;
  for (int n = 0; n < node_count(); ++n) {
    if (roles[n] == NodeRole::Retailer) out.push_back(n);
  }
  return out;
}

double FlowNetwork::edge_value(std::size_t e) const {
  const NetworkEdge& edge = edges[e];
  double value = -edge.cost;
  if (roles[edge.from] == NodeRole::Plant) value -= production_cost[edge.from];
  if (roles[edge.to] == NodeRole::Retailer) value += price[edge.to];
  return value;
}

void FlowNetwork::validate() const {
  const int n = node_count();
  if (static_cast<int>(production_cost.size()) != n || static_cast<int>(price.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "per-node cost and price vectors must match nodes");
  }
  std::vector<std::vector<int>> out_adj(n), in_adj(n);
  std::vector<int> indegree(n, 0);
  for (const NetworkEdge& e : edges) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
      throw Error(ErrorCode::DimensionMismatch, "network edge endpoint out of range");
    }
    if (!(e.capacity >= 0.0) || !std::isfinite(e.cost)) {
      throw Error(ErrorCode::InvalidArgument, "edge capacity must be >= 0 and cost finite");
    }
    if (roles[e.to] == NodeRole::Plant || roles[e.from] == NodeRole::Retailer) {
      throw Error(ErrorCode::InvalidArgument, "edges must run from plants toward retailers");
    }
    out_adj[e.from].push_back(e.to);
    in_adj[e.to].push_back(e.from);
    ++indegree[e.to];
  }
  std::vector<int> order;
  for (int v = 0; v < n; ++v) {
    if (indegree[v] == 0) order.push_back(v);
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (int w : out_adj[order[k]]) {
      if (--indegree[w] == 0) order.push_back(w);
    }
  }
  if (static_cast<int>(order.size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "network contains a directed cycle");
  }
  auto reach = [n](const std::vector<int>& seeds, const std::vector<std::vector<int>>& adj) {
    std::vector<bool> seen(n, false);
    std::vector<int> stack(seeds);
    for (int v : seeds) seen[v] = true;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : adj[v]) {
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
      }
    }
    return seen;
  };
  const std::vector<bool> from_plant = reach(plants(), out_adj);
  const std::vector<bool> to_retailer = reach(retailers(), in_adj);
  for (int v = 0; v < n; ++v) {
    if (roles[v] == NodeRole::Internal && !(from_plant[v] && to_retailer[v])) {
      throw Error(ErrorCode::InvalidArgument,
                  "internal node " + std::to_string(v) + " is not on a plant-retailer path");
    }
  }
}

SolveResult solve_min_cost_flow(const FlowNetwork& net, const Vector& retail_demand,
                                const Vector& plant_capacity) {
  net.validate();
  const std::vector<int> plant_nodes = net.plants();
  const std::vector<int> retailer_nodes = net.retailers();
  check_nonnegative(retail_demand, retailer_nodes.size(), "retail demand");
  check_nonnegative(plant_capacity, plant_nodes.size(), "plant capacity");

  const int n = net.node_count();
  const int sink = n;
  FlowProblem problem;
  problem.node_count = n + 1;
  problem.supply.assign(n + 1, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < plant_nodes.size(); ++k) {
    problem.supply[plant_nodes[k]] = plant_capacity[k];
    total += plant_capacity[k];
  }
  problem.supply[sink] = -total;
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    problem.add_arc(net.edges[e].from, net.edges[e].to, net.edges[e].capacity, -net.edge_value(e));
  }
  for (int p : plant_nodes) problem.add_arc(p, sink, kUnbounded, 0.0);
  for (std::size_t k = 0; k < retailer_nodes.size(); ++k) {
    problem.add_arc(retailer_nodes[k], sink, retail_demand[k], 0.0);
  }

  const FlowSolution sol = solve_network_simplex(problem);
  require_optimal(sol);

  SolveResult out;
  const std::size_t m = net.edges.size();
  out.x.assign(sol.flow.begin(), sol.flow.begin() + static_cast<std::ptrdiff_t>(m));
  double objective = 0.0;
  for (std::size_t e = 0; e < m; ++e) objective += net.edge_value(e) * out.x[e];
  out.objective = objective;
  const double pi_sink = sol.potential[sink];
  for (int p : plant_nodes) out.b.push_back(std::max(0.0, sol.potential[p] - pi_sink));
  for (int r : retailer_nodes) out.a.push_back(std::max(0.0, pi_sink - sol.potential[r]));
  out.edge_duals.resize(m);
  for (std::size_t e = 0; e < m; ++e) {
    out.edge_duals[e] = std::max(0.0, -reduced_cost(problem, sol, e));
  }
  out.node_potentials.resize(n);
  for (int v = 0; v < n; ++v) out.node_potentials[v] = sol.potential[v] - pi_sink;
  out.degenerate = sol.degenerate;
  out.dual_unique_hint = !sol.degenerate;
  out.primal_unique =
      has_unique_optimal_flow(problem, sol, kFeasTol * tolerance_scale(objective));
  return out;
}

}  // namespace spdebias
