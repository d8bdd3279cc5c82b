#include "spdebias/supply_chain.hpp"

#include <algorithm>
#include <cmath>

#include "spdebias/parallel.hpp"
#include "spdebias/random.hpp"

namespace spdebias {

FlowNetwork build_example_network(std::uint64_t seed) {
  using namespace sc_node;
  FlowNetwork net;
  net.roles.assign(14, NodeRole::Internal);
  net.roles[p1] = NodeRole::Plant;
  net.roles[p2] = NodeRole::Plant;
  net.roles[r1] = NodeRole::Retailer;
  net.roles[r2] = NodeRole::Retailer;
  net.production_cost.assign(14, 0.0);
  net.production_cost[p1] = 37.0;
  net.production_cost[p2] = 20.0;
  net.price.assign(14, 0.0);
  net.price[r1] = 50.0;
  net.price[r2] = 60.0;

  auto w = [](int k) { return w1 + k - 1; };
  const std::vector<std::pair<int, int>> topology = {
      {p1, w(1)},  {p1, w(2)},  {p2, w(3)},  {p2, w(4)},  {p2, w(5)},
      {w(1), w(6)}, {w(1), w(9)}, {w(2), w(7)}, {w(2), w(10)}, {w(3), w(6)},
      {w(3), w(9)}, {w(4), w(7)}, {w(4), w(10)}, {w(5), w(8)}, {w(6), r1},
      {w(7), r1},  {w(8), r1},  {w(9), r2},  {w(10), r2},
  };
  Rng rng = make_rng(seed);
  for (const auto& [from, to] : topology) {
    NetworkEdge e;
    e.from = from;
    e.to = to;
    e.capacity = static_cast<double>(poisson(rng, 80.0));
    e.cost = 5.0 * uniform01(rng);
    net.edges.push_back(e);
  }
  net.validate();
  return net;
}

std::vector<FlowPath> decompose_flow(const FlowNetwork& net, const Vector& x) {
  if (x.size() != net.edges.size()) {
    throw Error(ErrorCode::DimensionMismatch, "flow does not match network edges");
  }
  const int n = net.node_count();
  std::vector<std::vector<std::size_t>> incoming(n);
  double scale = 1.0;
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    incoming[net.edges[e].to].push_back(e);
    scale = std::max(scale, std::abs(x[e]));
  }
  const double tol = kFeasTol * scale;
  Vector left = x;
  std::vector<FlowPath> paths;
  const std::vector<int> retailer_nodes = net.retailers();
  for (std::size_t k = 0; k < retailer_nodes.size(); ++k) {
    for (;;) {
      FlowPath path;
      path.retailer = static_cast<int>(k);
      int v = retailer_nodes[k];
      double bottleneck = 0.0;
      bool first = true;
      while (net.roles[v] != NodeRole::Plant) {
        std::size_t pick = net.edges.size();
        for (std::size_t e : incoming[v]) {
          if (left[e] > tol) {
            pick = e;
            break;
          }
        }
        if (pick == net.edges.size()) {
          if (first) break;
          throw Error(ErrorCode::NumericalFailure, "flow violates conservation");
        }
        path.edges.push_back(pick);
        bottleneck = first ? left[pick] : std::min(bottleneck, left[pick]);
        first = false;
        v = net.edges[pick].from;
      }
      if (path.edges.empty()) break;
      std::reverse(path.edges.begin(), path.edges.end());
      path.amount = bottleneck;
      for (std::size_t e : path.edges) {
        left[e] -= bottleneck;
        if (std::abs(left[e]) <= tol) left[e] = 0.0;
        path.value += net.edge_value(e);
      }
      paths.push_back(std::move(path));
    }
  }
  for (double r : left) {
    if (std::abs(r) > tol) throw Error(ErrorCode::NumericalFailure, "flow left undecomposed");
  }
  return paths;
}

Vector retailer_values(const FlowNetwork& net, const Vector& x) {
  Vector out(net.retailers().size(), 0.0);
  for (const FlowPath& p : decompose_flow(net, x)) out[p.retailer] += p.amount * p.value;
  return out;
}

std::string to_string(SupplyRegime regime) {
  switch (regime) {
    case SupplyRegime::Undersupply: return "undersupply";
    case SupplyRegime::Oversupply: return "oversupply";
    case SupplyRegime::Custom: return "custom";
  }
  return "custom";
}

SupplyRegime parse_regime(const std::string& name) {
  if (name == "undersupply") return SupplyRegime::Undersupply;
  if (name == "oversupply") return SupplyRegime::Oversupply;
  if (name == "custom") return SupplyRegime::Custom;
  throw Error(ErrorCode::Config, "unknown regime '" + name + "'");
}

SupplyChainConfig SupplyChainConfig::for_regime(SupplyRegime regime) {
  SupplyChainConfig config;
  config.regime = regime;
  if (regime == SupplyRegime::Oversupply) config.lambda = {60.0, 60.0};
  return config;
}

void SupplyChainConfig::validate() const {
  if (lambda.size() != 2 || beta.size() != 2 || pi.size() != 2) {
    throw Error(ErrorCode::DimensionMismatch, "supply chain rates need two entries each");
  }
  for (std::size_t j = 0; j < 2; ++j) {
    if (!(lambda[j] >= 0.0) || !(pi[j] >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "rates must be nonnegative");
    }
    if (lambda[j] + beta[j] < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "treated rate lambda + beta is negative");
    }
  }
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::OutOfRange, "rho must lie in (0, 1)");
  if (replications < 1) throw Error(ErrorCode::InvalidArgument, "need at least one replication");
}

std::vector<Vector> supply_chain_beta_grid() {
  return {{10.0, 10.0}, {20.0, 20.0}, {-10.0, -10.0}, {-20.0, 20.0}, {20.0, -20.0}};
}

namespace {

std::int64_t as_count(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-6 || r < 0.0) {
    throw Error(ErrorCode::InconsistentCounts, "path flow is not a nonnegative integer");
  }
  return static_cast<std::int64_t>(r);
}

Vector draw_supply(Rng& rng, const Vector& pi) {
  Vector s(pi.size());
  for (std::size_t j = 0; j < pi.size(); ++j) s[j] = static_cast<double>(poisson(rng, pi[j]));
  return s;
}

double paired_truth(const FlowNetwork& net, const SupplyChainConfig& config, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const Vector s = draw_supply(rng, config.pi);
  Vector control(2), treated(2);
  for (std::size_t j = 0; j < 2; ++j) {
    const std::int64_t base = poisson(rng, config.lambda[j]);
    std::int64_t shifted = base;
    if (config.beta[j] > 0.0) {
      shifted = base + poisson(rng, config.beta[j]);
    } else if (config.beta[j] < 0.0) {
      shifted = binomial(rng, base, (config.lambda[j] + config.beta[j]) / config.lambda[j]);
    }
    control[j] = static_cast<double>(base);
    treated[j] = static_cast<double>(shifted);
  }
  return solve_min_cost_flow(net, treated, s).objective -
         solve_min_cost_flow(net, control, s).objective;
}

SupplyChainReplication run_replication(const FlowNetwork& net, const SupplyChainConfig& config,
                                       std::uint64_t seed) {
  const double rho = config.rho;
  Rng rng = make_rng(child_seed(seed, {0}));
  const Vector s = draw_supply(rng, config.pi);
  CountVector d_control(2), d_treatment(2);
  Vector d_experiment(2);
  for (std::size_t j = 0; j < 2; ++j) {
    d_control[j] = poisson(rng, (1.0 - rho) * config.lambda[j]);
    d_treatment[j] = poisson(rng, rho * (config.lambda[j] + config.beta[j]));
    d_experiment[j] = static_cast<double>(d_control[j] + d_treatment[j]);
  }
  const SolveResult solved = solve_min_cost_flow(net, d_experiment, s);
  const std::vector<FlowPath> paths = decompose_flow(net, solved.x);

  SupplyChainReplication rep;
  rep.a1 = solved.a[0];
  rep.a2 = solved.a[1];
  Rng split_rng = make_rng(child_seed(seed, {1}));
  for (std::size_t j = 0; j < 2; ++j) {
    const double weight_t = static_cast<double>(d_treatment[j]) / rho;
    const double weight_c = static_cast<double>(d_control[j]) / (1.0 - rho);
    CountVector sizes;
    Vector values;
    double captured = 0.0;
    std::int64_t served = 0;
    for (const FlowPath& p : paths) {
      if (p.retailer != static_cast<int>(j)) continue;
      sizes.push_back(as_count(p.amount));
      values.push_back(p.value);
      captured += p.amount * p.value;
      served += sizes.back();
    }
    const std::int64_t unserved = static_cast<std::int64_t>(d_experiment[j]) - served;
    if (unserved < 0) throw Error(ErrorCode::InconsistentCounts, "served exceeds demand");
    const double vbar = d_experiment[j] > 0.0 ? captured / d_experiment[j] : 0.0;
    rep.delta_rct += vbar * (weight_t - weight_c);
    rep.delta_sp += solved.a[j] * (weight_t - weight_c);

    sizes.push_back(unserved);
    const CountVector picked = multivariate_hypergeometric(split_rng, sizes, d_control[j]);
    double value_c = 0.0, value_t = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      value_c += static_cast<double>(picked[k]) * values[k];
      value_t += static_cast<double>(sizes[k] - picked[k]) * values[k];
    }
    rep.delta_rct_raw += value_t / rho - value_c / (1.0 - rho);
  }
  rep.delta_true = paired_truth(net, config, child_seed(seed, {2}));
  return rep;
}

}  // namespace

SupplyChainReport run_supply_chain_on_network(const FlowNetwork& net,
                                              const SupplyChainConfig& config,
                                              Execution execution) {
  config.validate();
  if (net.plants().size() != 2 || net.retailers().size() != 2) {
    throw Error(ErrorCode::DimensionMismatch, "network needs two plants and two retailers");
  }
  SupplyChainReport report;
  report.beta = config.beta;
  report.regime = config.regime;
  report.runs.resize(config.replications);
  for_each_index(config.replications, execution == Execution::Parallel, [&](std::size_t r) {
    report.runs[r] = run_replication(net, config, child_seed(config.seed, {r}));
  });
  std::vector<double> truth, rct, raw, sp;
  for (const SupplyChainReplication& rep : report.runs) {
    truth.push_back(rep.delta_true);
    rct.push_back(rep.delta_rct);
    raw.push_back(rep.delta_rct_raw);
    sp.push_back(rep.delta_sp);
  }
  report.delta_true = moments(truth);
  report.delta_rct = moments(rct);
  report.delta_rct_raw = moments(raw);
  report.delta_sp = moments(sp);
  return report;
}

SupplyChainReport run_supply_chain_experiment(const SupplyChainConfig& config,
                                              Execution execution) {
  return run_supply_chain_on_network(build_example_network(config.network_seed), config,
                                     execution);
}

}  // namespace spdebias
