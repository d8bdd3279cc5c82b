#pragma once

#include <utility>

#include "spdebias/common.hpp"
#include "spdebias/estimators.hpp"
#include "spdebias/lp_core.hpp"

namespace spdebias {

/// Secondary edge weights w, one per instance edge.
struct SecondaryMetric {
  Vector w;

  static SecondaryMetric from_dense(const MatchingInstance& inst, const Matrix& w);
  static SecondaryMetric primary(const MatchingInstance& inst);
  void validate(const MatchingInstance& inst) const;
};

struct SecondaryDuals {
  Vector a_w;  // may be negative
};

/// w evaluated at the unique optimum of the primary problem.
double phi_secondary(const MatchingInstance& inst, const SecondaryMetric& w, const Vector& d,
                     const Vector& s);

/// a_i^w = Phi^w(d + e_i, s) - Phi^w(d, s), or the left difference
/// Phi^w(d, s) - Phi^w(d - e_i, s) when `left` is set.
SecondaryDuals secondary_duals_bruteforce(const MatchingInstance& inst, const SecondaryMetric& w,
                                          const Vector& d, const Vector& s, bool left = false);

/// Solves the square system given by complementary slackness at a unique,
/// nondegenerate primal optimum.
SecondaryDuals secondary_duals_cs(const MatchingInstance& inst, const SecondaryMetric& w,
                                  const Vector& d, const Vector& s);

/// secondary_duals_cs, or left brute-force differences when the optimum is
/// degenerate and demand is unit-type.
SecondaryDuals secondary_duals(const MatchingInstance& inst, const SecondaryMetric& w,
                               const Vector& d, const Vector& s);

struct SecondaryEstimates {
  double rct_w = 0.0;
  double sp_w = 0.0;
};

SecondaryEstimates secondary_estimates(const ExperimentDraw& draw, const MatchSplit& split,
                                       const SecondaryDuals& a_w, const MatchingInstance& inst,
                                       const SecondaryMetric& w);

}  // namespace spdebias
