#include "spdebias/secondary.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

namespace spdebias {

SecondaryMetric SecondaryMetric::from_dense(const MatchingInstance& inst, const Matrix& w) {
  if (w.rows() != static_cast<std::size_t>(inst.n_d()) ||
      w.cols() != static_cast<std::size_t>(inst.n_s())) {
    throw Error(ErrorCode::DimensionMismatch, "secondary weights do not match instance");
  }
  SecondaryMetric metric;
  metric.w.reserve(inst.edge_count());
  for (const MatchEdge& e : inst.edges()) metric.w.push_back(w(e.i, e.j));
  metric.validate(inst);
  return metric;
}

SecondaryMetric SecondaryMetric::primary(const MatchingInstance& inst) {
  SecondaryMetric metric;
  for (const MatchEdge& e : inst.edges()) metric.w.push_back(e.v);
  return metric;
}

void SecondaryMetric::validate(const MatchingInstance& inst) const {
  if (w.size() != inst.edge_count()) {
    throw Error(ErrorCode::DimensionMismatch, "secondary weights do not match instance edges");
  }
  for (double value : w) {
    if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "secondary weight not finite");
  }
}

namespace {

double evaluate(const SecondaryMetric& w, const SolveResult& r) { return dot(w.w, r.x); }

SolveResult unique_solve(const MatchingInstance& inst, const Vector& d, const Vector& s) {
  SolveResult r = solve_matching(inst, d, s);
  if (!r.primal_unique) {
    throw Error(ErrorCode::NonUniquePrimal, "primary optimum is not unique");
  }
  return r;
}

}  // namespace

double phi_secondary(const MatchingInstance& inst, const SecondaryMetric& w, const Vector& d,
                     const Vector& s) {
  w.validate(inst);
  return evaluate(w, unique_solve(inst, d, s));
}

SecondaryDuals secondary_duals_bruteforce(const MatchingInstance& inst, const SecondaryMetric& w,
                                          const Vector& d, const Vector& s, bool left) {
  w.validate(inst);
  const double base = evaluate(w, unique_solve(inst, d, s));
  SecondaryDuals out;
  out.a_w.resize(inst.n_d());
  for (int i = 0; i < inst.n_d(); ++i) {
    Vector shifted = d;
    if (left) {
      if (d[i] < 1.0) {
        throw Error(ErrorCode::InvalidArgument, "left difference needs d_i >= 1");
      }
      shifted[i] -= 1.0;
      out.a_w[i] = base - evaluate(w, unique_solve(inst, shifted, s));
    } else {
      shifted[i] += 1.0;
      out.a_w[i] = evaluate(w, unique_solve(inst, shifted, s)) - base;
    }
  }
  return out;
}

SecondaryDuals secondary_duals_cs(const MatchingInstance& inst, const SecondaryMetric& w,
                                  const Vector& d, const Vector& s) {
  w.validate(inst);
  const SolveResult r = solve_matching(inst, d, s);
  if (!r.primal_unique) {
    throw Error(ErrorCode::NonUniquePrimal, "primary optimum is not unique");
  }
  const int n_d = inst.n_d();
  const int n_s = inst.n_s();
  const int n = n_d + n_s;
  const double tol = kFeasTol * tolerance_scale(r.objective);

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  int row = 0;
  auto next_row = [&]() {
    if (row >= n) {
      throw Error(ErrorCode::DegeneratePrimal,
                  "complementary slackness yields more than n_d + n_s equations");
    }
    return row++;
  };
  Vector col(n_s, 0.0);
  for (std::size_t k = 0; k < inst.edge_count(); ++k) {
    const MatchEdge& e = inst.edges()[k];
    col[e.j] += r.x[k];
    if (r.x[k] <= tol) continue;
    const int at = next_row();
    m(at, e.i) = 1.0;
    m(at, n_d + e.j) = 1.0;
    rhs(at) = w.w[k];
  }
  for (int i = 0; i < n_d; ++i) {
    if (r.row_total(inst, i) < d[i] - tol) m(next_row(), i) = 1.0;
  }
  for (int j = 0; j < n_s; ++j) {
    if (col[j] < s[j] - tol) m(next_row(), n_d + j) = 1.0;
  }
  if (row != n) {
    throw Error(ErrorCode::DegeneratePrimal,
                "complementary slackness yields " + std::to_string(row) + " equations for " +
                    std::to_string(n) + " unknowns");
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  if (!(lu.rcond() >= 1e-12)) {
    throw Error(ErrorCode::SingularSystem, "complementary slackness system is singular");
  }
  const Eigen::VectorXd solution = lu.solve(rhs);
  SecondaryDuals out;
  out.a_w.assign(solution.data(), solution.data() + n_d);
  return out;
}

SecondaryDuals secondary_duals(const MatchingInstance& inst, const SecondaryMetric& w,
                               const Vector& d, const Vector& s) {
  try {
    return secondary_duals_cs(inst, w, d, s);
  } catch (const Error& e) {
    const bool unit = std::all_of(d.begin(), d.end(), [](double x) { return x == 1.0; });
    if (e.code() != ErrorCode::DegeneratePrimal || !unit) throw;
    return secondary_duals_bruteforce(inst, w, d, s, true);
  }
}

SecondaryEstimates secondary_estimates(const ExperimentDraw& draw, const MatchSplit& split,
                                       const SecondaryDuals& a_w, const MatchingInstance& inst,
                                       const SecondaryMetric& w) {
  w.validate(inst);
  SecondaryEstimates out;
  double treated = 0.0;
  double control = 0.0;
  for (std::size_t k = 0; k < inst.edge_count(); ++k) {
    treated += w.w[k] * split.X_treatment[k];
    control += w.w[k] * split.X_control[k];
  }
  out.rct_w = (treated / draw.rho - control / (1.0 - draw.rho)) / draw.tau;
  out.sp_w = sp_estimate_sample(draw, a_w.a_w);
  return out;
}

}  // namespace spdebias
