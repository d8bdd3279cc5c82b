#include "spdebias/network_simplex.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

#include "spdebias/common.hpp"

namespace spdebias {

int FlowProblem::add_arc(int source, int target, double capacity, double cost) {
  arcs.push_back({source, target, capacity, cost});
  return static_cast<int>(arcs.size()) - 1;
}

namespace {

constexpr signed char kStateUpper = -1;
constexpr signed char kStateTree = 0;
constexpr signed char kStateLower = 1;
constexpr int kDirUp = 1;
constexpr int kDirDown = -1;

// Spanning-tree bookkeeping follows the classic parent/thread/succ_num layout:
// thread_ is a preorder traversal, succ_num_ counts subtree sizes and
// last_succ_ is the last node of each subtree in thread order.
class NetworkSimplex {
 public:
  explicit NetworkSimplex(const FlowProblem& problem) : problem_(problem) {}

  FlowSolution run(const NetworkSimplexOptions& options);

 private:
  void init();
  bool find_entering_arc();
  void find_join_node();
  bool find_leaving_arc();
  void change_flow(bool change);
  void update_tree_structure();
  void update_potential();
  void recompute_potentials();
  double snap(int arc, double value) const;

  const FlowProblem& problem_;

  int node_num_ = 0;
  int arc_num_ = 0;
  int all_arc_num_ = 0;
  int root_ = 0;

  std::vector<int> source_;
  std::vector<int> target_;
  std::vector<double> cap_;
  std::vector<double> cost_;
  std::vector<double> flow_;
  std::vector<double> pi_;
  std::vector<signed char> state_;

  std::vector<int> parent_;
  std::vector<int> pred_;
  std::vector<int> thread_;
  std::vector<int> rev_thread_;
  std::vector<int> succ_num_;
  std::vector<int> last_succ_;
  std::vector<int> pred_dir_;
  std::vector<int> dirty_revs_;

  int in_arc_ = -1;
  int join_ = -1;
  int u_in_ = -1;
  int v_in_ = -1;
  int u_out_ = -1;
  int v_out_ = -1;
  int first_ = -1;
  int second_ = -1;
  double delta_ = 0.0;

  int next_arc_ = 0;
  int block_size_ = 10;
  double eps_ = 0.0;
  double flow_tol_ = 0.0;
};

void NetworkSimplex::init() {
  node_num_ = problem_.node_count;
  arc_num_ = static_cast<int>(problem_.arcs.size());
  all_arc_num_ = arc_num_ + node_num_;
  root_ = node_num_;
  const int all_node_num = node_num_ + 1;

  source_.assign(all_arc_num_, 0);
  target_.assign(all_arc_num_, 0);
  cap_.assign(all_arc_num_, 0.0);
  cost_.assign(all_arc_num_, 0.0);
  flow_.assign(all_arc_num_, 0.0);
  state_.assign(all_arc_num_, kStateLower);

  parent_.assign(all_node_num, -1);
  pred_.assign(all_node_num, -1);
  thread_.assign(all_node_num, 0);
  rev_thread_.assign(all_node_num, 0);
  succ_num_.assign(all_node_num, 0);
  last_succ_.assign(all_node_num, 0);
  pred_dir_.assign(all_node_num, kDirUp);
  pi_.assign(all_node_num, 0.0);

  double cost_scale = 1.0;
  double supply_scale = 1.0;
  for (int e = 0; e < arc_num_; ++e) {
    const FlowArc& arc = problem_.arcs[e];
    source_[e] = arc.source;
    target_[e] = arc.target;
    cap_[e] = arc.capacity;
    cost_[e] = arc.cost;
    cost_scale = std::max(cost_scale, std::abs(arc.cost));
    if (std::isfinite(arc.capacity)) supply_scale = std::max(supply_scale, arc.capacity);
  }
  for (double b : problem_.supply) supply_scale = std::max(supply_scale, std::abs(b));

  // Any real path is cheaper than one artificial arc.
  const double art_cost = (cost_scale + 1.0) * (node_num_ + 1);
  eps_ = std::max(1e-12, 128.0 * DBL_EPSILON * art_cost);
  flow_tol_ = 1e-12 * supply_scale;

  parent_[root_] = -1;
  pred_[root_] = -1;
  thread_[root_] = 0;
  rev_thread_[0] = root_;
  succ_num_[root_] = all_node_num;
  last_succ_[root_] = root_ - 1;
  pi_[root_] = 0.0;

  for (int u = 0, e = arc_num_; u != node_num_; ++u, ++e) {
    parent_[u] = root_;
    pred_[u] = e;
    thread_[u] = u + 1;
    rev_thread_[u + 1] = u;
    succ_num_[u] = 1;
    last_succ_[u] = u;
    cap_[e] = kUnbounded;
    state_[e] = kStateTree;
    const double b = problem_.supply[u];
    if (b >= 0) {
      pred_dir_[u] = kDirUp;
      pi_[u] = 0.0;
      source_[e] = u;
      target_[e] = root_;
      flow_[e] = b;
      cost_[e] = 0.0;
    } else {
      pred_dir_[u] = kDirDown;
      pi_[u] = art_cost;
      source_[e] = root_;
      target_[e] = u;
      flow_[e] = -b;
      cost_[e] = art_cost;
    }
  }

  block_size_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(arc_num_))));
  next_arc_ = 0;
}

bool NetworkSimplex::find_entering_arc() {
  if (arc_num_ == 0) return false;
  double min = 0.0;
  int cnt = block_size_;
  int e = next_arc_;
  for (int scanned = 0; scanned < arc_num_; ++scanned, ++e) {
    if (e == arc_num_) e = 0;
    const double c = state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
    if (c < min) {
      min = c;
      in_arc_ = e;
    }
    if (--cnt == 0) {
      if (min < -eps_) {
        next_arc_ = e;
        return true;
      }
      cnt = block_size_;
    }
  }
  if (min < -eps_) {
    next_arc_ = e == arc_num_ ? 0 : e;
    return true;
  }
  return false;
}

void NetworkSimplex::find_join_node() {
  int u = source_[in_arc_];
  int v = target_[in_arc_];
  while (u != v) {
    if (succ_num_[u] < succ_num_[v]) {
      u = parent_[u];
    } else {
      v = parent_[v];
    }
  }
  join_ = u;
}

bool NetworkSimplex::find_leaving_arc() {
  if (state_[in_arc_] == kStateLower) {
    first_ = source_[in_arc_];
    second_ = target_[in_arc_];
  } else {
    first_ = target_[in_arc_];
    second_ = source_[in_arc_];
  }
  delta_ = cap_[in_arc_];
  int result = 0;

  // Strict comparison on the first path and non-strict on the second keeps
  // the tree strongly feasible (last blocking arc leaves).
  for (int u = first_; u != join_; u = parent_[u]) {
    const int e = pred_[u];
    double d = flow_[e];
    if (pred_dir_[u] == kDirDown) d = cap_[e] - flow_[e];
    d = std::max(d, 0.0);
    if (d < delta_) {
      delta_ = d;
      u_out_ = u;
      result = 1;
    }
  }
  for (int u = second_; u != join_; u = parent_[u]) {
    const int e = pred_[u];
    double d = flow_[e];
    if (pred_dir_[u] == kDirUp) d = cap_[e] - flow_[e];
    d = std::max(d, 0.0);
    if (d <= delta_) {
      delta_ = d;
      u_out_ = u;
      result = 2;
    }
  }

  if (result == 1) {
    u_in_ = first_;
    v_in_ = second_;
  } else {
    u_in_ = second_;
    v_in_ = first_;
  }
  return result != 0;
}

double NetworkSimplex::snap(int arc, double value) const {
  if (std::abs(value) <= flow_tol_) return 0.0;
  if (std::isfinite(cap_[arc]) && std::abs(cap_[arc] - value) <= flow_tol_) return cap_[arc];
  return value;
}

void NetworkSimplex::change_flow(bool change) {
  if (delta_ > 0) {
    const double val = state_[in_arc_] * delta_;
    flow_[in_arc_] += val;
    for (int u = source_[in_arc_]; u != join_; u = parent_[u]) {
      const int e = pred_[u];
      flow_[e] = snap(e, flow_[e] - pred_dir_[u] * val);
    }
    for (int u = target_[in_arc_]; u != join_; u = parent_[u]) {
      const int e = pred_[u];
      flow_[e] = snap(e, flow_[e] + pred_dir_[u] * val);
    }
  }

  if (change) {
    state_[in_arc_] = kStateTree;
    const int leaving = pred_[u_out_];
    const bool at_lower = !std::isfinite(cap_[leaving]) ||
                          std::abs(flow_[leaving]) <= std::abs(cap_[leaving] - flow_[leaving]);
    state_[leaving] = at_lower ? kStateLower : kStateUpper;
    flow_[leaving] = at_lower ? 0.0 : cap_[leaving];
  } else {
    state_[in_arc_] = static_cast<signed char>(-state_[in_arc_]);
    flow_[in_arc_] = state_[in_arc_] == kStateLower ? 0.0 : cap_[in_arc_];
  }
}

void NetworkSimplex::update_tree_structure() {
  int w;
  int u = last_succ_[u_in_];
  const int old_rev_thread = rev_thread_[u_out_];
  const int old_succ_num = succ_num_[u_out_];
  const int old_last_succ = last_succ_[u_out_];
  v_out_ = parent_[u_out_];
  int right = thread_[u];

  // When old_rev_thread equals v_in, join and v_out coincide.
  const int last = old_rev_thread == v_in_ ? thread_[last_succ_[u_out_]] : thread_[v_in_];

  // Re-hang the stem (nodes between u_in and u_out) and splice the thread.
  int stem = u_in_;
  int par_stem = v_in_;
  thread_[v_in_] = stem;
  dirty_revs_.clear();
  dirty_revs_.push_back(v_in_);
  while (stem != u_out_) {
    const int new_stem = parent_[stem];
    thread_[u] = new_stem;
    dirty_revs_.push_back(u);

    w = rev_thread_[stem];
    thread_[w] = right;
    rev_thread_[right] = w;

    parent_[stem] = par_stem;
    par_stem = stem;
    stem = new_stem;

    u = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
    right = thread_[u];
  }
  parent_[u_out_] = par_stem;
  thread_[u] = last;
  rev_thread_[last] = u;
  last_succ_[u_out_] = u;

  if (old_rev_thread != v_in_) {
    thread_[old_rev_thread] = right;
    rev_thread_[right] = old_rev_thread;
  }

  for (int node : dirty_revs_) rev_thread_[thread_[node]] = node;

  int tmp_sc = 0;
  const int tmp_ls = last_succ_[u_out_];
  u = u_out_;
  while (u != u_in_) {
    w = parent_[u];
    pred_[u] = pred_[w];
    pred_dir_[u] = -pred_dir_[w];
    tmp_sc += succ_num_[u] - succ_num_[w];
    succ_num_[u] = tmp_sc;
    last_succ_[w] = tmp_ls;
    u = w;
  }
  pred_[u_in_] = in_arc_;
  pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kDirUp : kDirDown;
  succ_num_[u_in_] = old_succ_num;

  int up_limit_in = -1;
  int up_limit_out = -1;
  if (last_succ_[join_] == v_in_) {
    up_limit_out = join_;
  } else {
    up_limit_in = join_;
  }

  for (u = v_in_; u != up_limit_in && last_succ_[u] == v_in_; u = parent_[u]) {
    last_succ_[u] = last_succ_[u_out_];
  }

  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
      last_succ_[u] = old_rev_thread;
    }
  } else {
    for (u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
      last_succ_[u] = last_succ_[u_out_];
    }
  }

  for (u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
  for (u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void NetworkSimplex::update_potential() {
  const double sigma = pred_dir_[u_in_] == kDirUp
                           ? pi_[v_in_] - pi_[u_in_] - cost_[in_arc_]
                           : pi_[v_in_] - pi_[u_in_] + cost_[in_arc_];
  const int end = thread_[last_succ_[u_in_]];
  for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
}

// Incremental updates drift over many pivots; a preorder sweep restores
// potentials that zero every tree arc's reduced cost exactly.
void NetworkSimplex::recompute_potentials() {
  pi_[root_] = 0.0;
  for (int u = thread_[root_]; u != root_; u = thread_[u]) {
    const int e = pred_[u];
    pi_[u] = pred_dir_[u] == kDirUp ? pi_[parent_[u]] - cost_[e] : pi_[parent_[u]] + cost_[e];
  }
}

FlowSolution NetworkSimplex::run(const NetworkSimplexOptions& options) {
  FlowSolution out;
  if (static_cast<int>(problem_.supply.size()) != problem_.node_count) {
    throw Error(ErrorCode::DimensionMismatch, "supply vector does not match node count");
  }
  double total = 0.0;
  double scale = 1.0;
  for (double b : problem_.supply) {
    total += b;
    scale = std::max(scale, std::abs(b));
  }
  if (std::abs(total) > 1e-9 * scale * std::max(1, problem_.node_count)) {
    throw Error(ErrorCode::InvalidArgument, "node supplies must sum to zero");
  }
  for (const FlowArc& arc : problem_.arcs) {
    if (arc.source < 0 || arc.source >= problem_.node_count || arc.target < 0 ||
        arc.target >= problem_.node_count) {
      throw Error(ErrorCode::DimensionMismatch, "arc endpoint out of range");
    }
    if (!(arc.capacity >= 0) || !std::isfinite(arc.cost)) {
      throw Error(ErrorCode::InvalidArgument, "arc capacity must be >= 0 and cost finite");
    }
  }

  init();
  const std::size_t limit =
      options.max_pivots != 0
          ? options.max_pivots
          : 200 * static_cast<std::size_t>(node_num_ + arc_num_) + 100000;

  std::size_t pivots = 0;
  for (int round = 0; round < 8; ++round) {
    while (find_entering_arc()) {
      if (++pivots > limit) {
        out.status = FlowStatus::PivotLimit;
        out.pivots = pivots;
        return out;
      }
      find_join_node();
      const bool change = find_leaving_arc();
      if (!std::isfinite(delta_)) {
        out.status = FlowStatus::Unbounded;
        out.pivots = pivots;
        return out;
      }
      change_flow(change);
      if (change) {
        update_tree_structure();
        update_potential();
      }
    }
    recompute_potentials();
    if (!find_entering_arc()) break;
  }

  for (int e = arc_num_; e < all_arc_num_; ++e) {
    if (flow_[e] > flow_tol_ * 1e3) {
      out.status = FlowStatus::Infeasible;
      out.pivots = pivots;
      return out;
    }
  }

  out.status = FlowStatus::Optimal;
  out.pivots = pivots;
  out.flow.assign(flow_.begin(), flow_.begin() + arc_num_);
  out.potential.assign(pi_.begin(), pi_.begin() + node_num_);
  out.basic.assign(arc_num_, false);
  int artificial_in_tree = 0;
  bool at_bound = false;
  for (int u = 0; u < node_num_; ++u) {
    const int e = pred_[u];
    if (e >= arc_num_) {
      ++artificial_in_tree;
      continue;
    }
    out.basic[e] = true;
    if (flow_[e] <= flow_tol_ || (std::isfinite(cap_[e]) && cap_[e] - flow_[e] <= flow_tol_)) {
      at_bound = true;
    }
  }
  out.degenerate = at_bound || artificial_in_tree > 1;
  double cost = 0.0;
  for (int e = 0; e < arc_num_; ++e) cost += cost_[e] * flow_[e];
  out.cost = cost;
  return out;
}

// Iterative Tarjan SCC over an explicit adjacency list.
std::vector<int> strongly_connected_components(int n, const std::vector<std::vector<int>>& adj,
                                               int& component_count) {
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  std::vector<std::pair<int, std::size_t>> call;
  int counter = 0;
  component_count = 0;
  for (int start = 0; start < n; ++start) {
    if (index[start] != -1) continue;
    call.emplace_back(start, 0);
    index[start] = low[start] = counter++;
    stack.push_back(start);
    on_stack[start] = true;
    while (!call.empty()) {
      auto& [v, next] = call.back();
      if (next < adj[v].size()) {
        const int w = adj[v][next++];
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = component_count;
        } while (w != v);
        ++component_count;
      }
      const int finished = v;
      call.pop_back();
      if (!call.empty()) {
        const int parent = call.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }
  return comp;
}

}  // namespace

FlowSolution solve_network_simplex(const FlowProblem& problem,
                                   const NetworkSimplexOptions& options) {
  NetworkSimplex solver(problem);
  return solver.run(options);
}

double reduced_cost(const FlowProblem& problem, const FlowSolution& solution, std::size_t arc) {
  const FlowArc& a = problem.arcs[arc];
  return a.cost + solution.potential[a.source] - solution.potential[a.target];
}

bool has_unique_optimal_flow(const FlowProblem& problem, const FlowSolution& solution,
                             double tol) {
  // Every optimal flow satisfies complementary slackness with the returned
  // potentials, so alternative optima differ by circulations on arcs whose
  // reduced cost is zero. Such a circulation exists iff the residual graph on
  // those arcs has a directed cycle other than an arc paired with its own
  // reverse.
  const int n = problem.node_count;
  std::vector<std::vector<int>> adj(n);
  struct Residual {
    int arc;
    bool forward;
    bool backward;
  };
  std::vector<Residual> residual;
  for (std::size_t e = 0; e < problem.arcs.size(); ++e) {
    if (std::abs(reduced_cost(problem, solution, e)) > tol) continue;
    const FlowArc& a = problem.arcs[e];
    const double f = solution.flow[e];
    const bool fwd = !std::isfinite(a.capacity) || a.capacity - f > tol;
    const bool bwd = f > tol;
    if (!fwd && !bwd) continue;
    if (a.source == a.target) return false;
    residual.push_back({static_cast<int>(e), fwd, bwd});
    if (fwd) adj[a.source].push_back(a.target);
    if (bwd) adj[a.target].push_back(a.source);
  }
  int component_count = 0;
  const std::vector<int> comp = strongly_connected_components(n, adj, component_count);
  std::vector<int> nodes_in(component_count, 0);
  std::vector<int> arcs_in(component_count, 0);
  std::vector<bool> one_way(component_count, false);
  for (int v = 0; v < n; ++v) ++nodes_in[comp[v]];
  for (const Residual& r : residual) {
    const FlowArc& a = problem.arcs[r.arc];
    if (comp[a.source] != comp[a.target]) continue;
    const int c = comp[a.source];
    ++arcs_in[c];
    if (!(r.forward && r.backward)) one_way[c] = true;
  }
  for (int c = 0; c < component_count; ++c) {
    if (nodes_in[c] < 2) continue;
    if (one_way[c] || arcs_in[c] >= nodes_in[c]) return false;
  }
  return true;
}

}  // namespace spdebias
