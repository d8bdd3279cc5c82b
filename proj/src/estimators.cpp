#include "spdebias/estimators.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace spdebias {

CountVector ExperimentDraw::D_experiment() const {
  CountVector out(D_control.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = D_control[i] + D_treatment[i];
  return out;
}

namespace {

void check_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::OutOfRange, "rho must lie in (0, 1)");
}

}  // namespace

FluidEstimate rct_estimate_fluid(const MatchingInstance& inst, const MarketRates& rates,
                                 double rho) {
  rates.validate(inst);
  check_rho(rho);
  const Vector d = rates.demand_at(rho);
  const SolveResult r = solve_matching(inst, d, rates.pi);
  FluidEstimate out;
  out.degenerate = !r.primal_unique;
  out.per_type.assign(inst.n_d(), 0.0);
  out.zero_demand_type.assign(inst.n_d(), false);
  for (int i = 0; i < inst.n_d(); ++i) {
    if (d[i] <= 0.0) {
      out.zero_demand_type[i] = true;
      continue;
    }
    double value = 0.0;
    for (std::size_t k = inst.row_begin(i); k < inst.row_begin(i + 1); ++k) {
      value += r.x[k] * inst.edges()[k].v;
    }
    out.per_type[i] = value / d[i];
  }
  out.value = dot(out.per_type, rates.beta);
  return out;
}

FluidEstimate sp_estimate_fluid(const MatchingInstance& inst, const MarketRates& rates,
                                double rho) {
  rates.validate(inst);
  check_rho(rho);
  const SolveResult r = solve_matching(inst, rates.demand_at(rho), rates.pi);
  FluidEstimate out;
  out.degenerate = !r.dual_unique_hint;
  out.per_type = r.a;
  out.zero_demand_type.assign(inst.n_d(), false);
  out.value = dot(r.a, rates.beta);
  const double left = psi_slope(inst, rates, std::max(0.0, rho - kProbeOffset));
  const double right = psi_slope(inst, rates, std::min(1.0, rho + kProbeOffset));
  const double tol = kDualTol * tolerance_scale(r.objective);
  if (std::abs(left - right) > tol) {
    throw Error(ErrorCode::BreakpointAmbiguity,
                "experiment point is a kink of Psi: left slope " + std::to_string(left) +
                    ", right slope " + std::to_string(right));
  }
  return out;
}

double rct_estimate_sample(const ExperimentDraw& draw, const MatchSplit& split,
                           const MatchingInstance& inst) {
  double treated = 0.0;
  double control = 0.0;
  for (std::size_t k = 0; k < inst.edge_count(); ++k) {
    treated += inst.edges()[k].v * split.X_treatment[k];
    control += inst.edges()[k].v * split.X_control[k];
  }
  return (treated / draw.rho - control / (1.0 - draw.rho)) / draw.tau;
}

double rct_estimate_sample_rb(const ExperimentDraw& draw, const Vector& x_total,
                              const MatchingInstance& inst) {
  double total = 0.0;
  for (int i = 0; i < inst.n_d(); ++i) {
    const double d_exp = static_cast<double>(draw.D_control[i] + draw.D_treatment[i]);
    if (d_exp <= 0.0) continue;
    double value = 0.0;
    for (std::size_t k = inst.row_begin(i); k < inst.row_begin(i + 1); ++k) {
      value += x_total[k] * inst.edges()[k].v;
    }
    const double vbar = value / d_exp;
    total += vbar * (static_cast<double>(draw.D_treatment[i]) / draw.rho -
                     static_cast<double>(draw.D_control[i]) / (1.0 - draw.rho));
  }
  return total / draw.tau;
}

double sp_estimate_sample(const ExperimentDraw& draw, const Vector& duals_a) {
  if (duals_a.size() != draw.D_control.size() || duals_a.size() != draw.D_treatment.size()) {
    throw Error(ErrorCode::DimensionMismatch, "duals do not match demand types");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < duals_a.size(); ++i) {
    total += duals_a[i] * (static_cast<double>(draw.D_treatment[i]) / draw.rho -
                           static_cast<double>(draw.D_control[i]) / (1.0 - draw.rho));
  }
  return total / draw.tau;
}

EstimateReport bias_report(const MatchingInstance& inst, const MarketRates& rates, double rho) {
  EstimateReport report;
  report.delta_true = gte_fluid(inst, rates);
  const FluidEstimate rct = rct_estimate_fluid(inst, rates, rho);
  report.delta_rct = rct.value;
  report.vbar = rct.per_type;
  report.zero_demand_type = rct.zero_demand_type;
  report.degenerate = rct.degenerate;
  try {
    const FluidEstimate sp = sp_estimate_fluid(inst, rates, rho);
    report.delta_sp = sp.value;
    report.a = sp.per_type;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BreakpointAmbiguity) throw;
    report.breakpoint_ambiguous = true;
    report.delta_sp = std::numeric_limits<double>::quiet_NaN();
    report.a = solve_matching(inst, rates.demand_at(rho), rates.pi).a;
  }
  report.bias_rct = std::abs(report.delta_rct - report.delta_true);
  report.bias_sp = std::abs(report.delta_sp - report.delta_true);
  report.sign_consistent = rates.sign_consistent();
  report.symmetric = rho == 0.5;
  return report;
}

double expected_sp_uniform_rho(const PsiProfile& profile, const MarketRates&) {
  return gte_via_integral(profile);
}

}  // namespace spdebias
