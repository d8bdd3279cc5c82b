#include "spdebias/stochastic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spdebias/parallel.hpp"
#include "spdebias/random.hpp"

namespace spdebias {

ExperimentDraw draw_experiment(const MarketRates& rates, double tau, double rho,
                               std::uint64_t seed) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::OutOfRange, "rho must lie in (0, 1)");
  Rng rng = make_rng(seed);
  ExperimentDraw draw;
  draw.tau = tau;
  draw.rho = rho;
  draw.seed = seed;
  const std::size_t n_d = rates.lambda.size();
  draw.D_control.resize(n_d);
  draw.D_treatment.resize(n_d);
  for (std::size_t i = 0; i < n_d; ++i) {
    draw.D_control[i] = poisson(rng, (1.0 - rho) * rates.lambda[i] * tau);
    draw.D_treatment[i] =
        poisson(rng, std::max(0.0, rho * (rates.lambda[i] + rates.beta[i]) * tau));
  }
  draw.S.resize(rates.pi.size());
  for (std::size_t j = 0; j < rates.pi.size(); ++j) draw.S[j] = poisson(rng, rates.pi[j] * tau);
  return draw;
}

namespace {

std::int64_t as_count(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-6 || r < 0.0) {
    throw Error(ErrorCode::InconsistentCounts, "matched quantity is not a nonnegative integer");
  }
  return static_cast<std::int64_t>(r);
}

}  // namespace

MatchSplit split_matches(const MatchingInstance& inst, const Vector& x_total,
                         const CountVector& D_control, const CountVector& D_experiment,
                         std::uint64_t seed) {
  const auto n_d = static_cast<std::size_t>(inst.n_d());
  if (x_total.size() != inst.edge_count() || D_control.size() != n_d ||
      D_experiment.size() != n_d) {
    throw Error(ErrorCode::DimensionMismatch, "split inputs do not match instance");
  }
  Rng rng = make_rng(seed);
  MatchSplit split;
  split.X_control.assign(inst.edge_count(), 0.0);
  split.X_treatment.assign(inst.edge_count(), 0.0);
  for (int i = 0; i < inst.n_d(); ++i) {
    const std::size_t begin = inst.row_begin(i);
    const std::size_t end = inst.row_begin(i + 1);
    CountVector sizes;
    std::int64_t matched = 0;
    for (std::size_t k = begin; k < end; ++k) {
      sizes.push_back(as_count(x_total[k]));
      matched += sizes.back();
    }
    const std::int64_t unmatched = D_experiment[i] - matched;
    if (unmatched < 0 || D_control[i] < 0 || D_control[i] > D_experiment[i]) {
      throw Error(ErrorCode::InconsistentCounts,
                  "matches or control count exceed experiment demand of type " +
                      std::to_string(i));
    }
    sizes.push_back(unmatched);
    const CountVector picked = multivariate_hypergeometric(rng, sizes, D_control[i]);
    for (std::size_t k = begin; k < end; ++k) {
      split.X_control[k] = static_cast<double>(picked[k - begin]);
      split.X_treatment[k] = static_cast<double>(sizes[k - begin] - picked[k - begin]);
    }
  }
  return split;
}

EstimateRecord run_cycle(const MatchingInstance& inst, const MarketRates& rates, double tau,
                         double rho, std::uint64_t seed) {
  const ExperimentDraw draw = draw_experiment(rates, tau, rho, child_seed(seed, {0}));
  const CountVector d_exp = draw.D_experiment();
  const Vector d = to_real(d_exp);
  const Vector s = to_real(draw.S);
  const SolveResult solved = solve_matching(inst, d, s);
  const MatchSplit split =
      split_matches(inst, solved.x, draw.D_control, d_exp, child_seed(seed, {1}));

  EstimateRecord record;
  record.tau = tau;
  record.rho = rho;
  record.seed = seed;
  record.delta_rct_raw = rct_estimate_sample(draw, split, inst);
  record.delta_rct_rb = rct_estimate_sample_rb(draw, solved.x, inst);
  record.phi_scaled = solved.objective / tau;

  Vector duals = solved.a;
  record.degenerate = solved.degenerate;
  const bool unit = std::all_of(d.begin(), d.end(), [](double x) { return x == 1.0; });
  if (solved.degenerate && unit) {
    const double epsilon = 1.0 / (2.0 * static_cast<double>(d.size()));
    duals = solve_matching(inst, perturb_demand(d, epsilon), s).a;
    record.degenerate = false;
  }
  record.delta_sp = sp_estimate_sample(draw, duals);
  return record;
}

GteEstimate simulate_gte(const MarketRates& rates, const MatchingInstance& inst, double tau,
                         std::size_t replications, std::uint64_t seed, Execution execution) {
  if (replications < 1) throw Error(ErrorCode::InvalidArgument, "need at least one replication");
  rates.validate(inst);
  GteEstimate out;
  out.samples.assign(replications, 0.0);
  for_each_index(replications, execution == Execution::Parallel, [&](std::size_t r) {
    Rng rng = make_rng(child_seed(seed, {r}));
    Vector control(rates.lambda.size());
    Vector treated(rates.lambda.size());
    for (std::size_t i = 0; i < control.size(); ++i) {
      const std::int64_t base = poisson(rng, rates.lambda[i] * tau);
      std::int64_t shifted = base;
      if (rates.beta[i] > 0.0) {
        shifted = base + poisson(rng, rates.beta[i] * tau);
      } else if (rates.beta[i] < 0.0) {
        shifted = binomial(rng, base, (rates.lambda[i] + rates.beta[i]) / rates.lambda[i]);
      }
      control[i] = static_cast<double>(base);
      treated[i] = static_cast<double>(shifted);
    }
    Vector supply(rates.pi.size());
    for (std::size_t j = 0; j < supply.size(); ++j) {
      supply[j] = static_cast<double>(poisson(rng, rates.pi[j] * tau));
    }
    out.samples[r] = (phi(inst, treated, supply) - phi(inst, control, supply)) / tau;
  });
  const Moments m = moments(out.samples);
  out.mean = m.mean;
  out.std_error = m.std_error;
  return out;
}

MonteCarloStats monte_carlo(const SimConfig& config, Execution execution) {
  if (config.replications < 1) {
    throw Error(ErrorCode::InvalidArgument, "need at least one replication");
  }
  config.rates.validate(config.inst);
  const std::size_t reps = config.replications;
  MonteCarloStats stats;
  stats.records.resize(config.taus.size() * reps);
  for (std::size_t t = 0; t < config.taus.size(); ++t) {
    if (!(config.taus[t] >= 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must be >= 1");
  }
  for_each_index(stats.records.size(), execution == Execution::Parallel, [&](std::size_t k) {
    const std::size_t t = k / reps;
    const std::size_t r = k % reps;
    stats.records[k] = run_cycle(config.inst, config.rates, config.taus[t], config.rho,
                                 child_seed(config.seed, {t, r}));
  });

  for (std::size_t t = 0; t < config.taus.size(); ++t) {
    MonteCarloRow row;
    row.tau = config.taus[t];
    std::vector<double> raw, rb, sp, phis;
    for (std::size_t r = 0; r < reps; ++r) {
      const EstimateRecord& rec = stats.records[t * reps + r];
      raw.push_back(rec.delta_rct_raw);
      rb.push_back(rec.delta_rct_rb);
      sp.push_back(rec.delta_sp);
      phis.push_back(rec.phi_scaled);
      if (rec.degenerate) ++row.degenerate_count;
    }
    row.rct_raw = moments(raw);
    row.rct_rb = moments(rb);
    row.sp = moments(sp);
    row.phi_scaled = moments(phis);
    row.var_sqrt_tau_rct_raw = row.tau * row.rct_raw.variance;
    row.var_sqrt_tau_rct_rb = row.tau * row.rct_rb.variance;
    row.var_sqrt_tau_sp = row.tau * row.sp.variance;
    if (config.estimate_gte) {
      const GteEstimate gte = simulate_gte(config.rates, config.inst, row.tau, reps,
                                           child_seed(config.seed, {t, reps, 1}), execution);
      row.gte = moments(gte.samples);
    }
    stats.rows.push_back(row);
  }
  return stats;
}

std::vector<ScalingRow> supply_scaling_sweep(const MatchingInstance& inst,
                                             const MarketRates& rates, const Vector& factors,
                                             double rho) {
  for (double b : rates.beta) {
    if (b < 0.0) throw Error(ErrorCode::InvalidArgument, "scaling sweep requires beta >= 0");
  }
  std::vector<ScalingRow> rows;
  for (double f : factors) {
    if (!(f > 0.0)) throw Error(ErrorCode::InvalidArgument, "scaling factors must be positive");
    MarketRates over = rates;
    for (double& p : over.pi) p *= f;
    rows.push_back({"oversupply", f, bias_report(inst, over, rho)});
    MarketRates under = rates;
    for (double& l : under.lambda) l *= f;
    for (double& b : under.beta) b *= f;
    if (under.lambda_tilde) {
      for (double& l : *under.lambda_tilde) l *= f;
    }
    rows.push_back({"undersupply", f, bias_report(inst, under, rho)});
  }
  return rows;
}

}  // namespace spdebias
