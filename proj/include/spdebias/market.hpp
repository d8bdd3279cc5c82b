#pragma once

#include <optional>
#include <vector>

#include "spdebias/common.hpp"
#include "spdebias/lp_core.hpp"

namespace spdebias {

/// Fluid arrival rates. Control demand is lambda, global treatment demand is
/// lambda + beta, supply is pi.
struct MarketRates {
  Vector lambda;
  Vector pi;
  Vector beta;
  // Optional intent decomposition: lambda = lambda_tilde * p, beta = lambda_tilde * q.
  std::optional<Vector> lambda_tilde;
  std::optional<Vector> p;
  std::optional<Vector> q;

  static MarketRates from_intent(const Vector& lambda_tilde, const Vector& p, const Vector& q,
                                 const Vector& pi);

  void validate(const MatchingInstance& inst) const;
  bool sign_consistent() const;
  /// lambda + eta * beta, clamped at zero against rounding.
  Vector demand_at(double eta) const;
};

struct PsiProfile {
  Vector breakpoints;  // 0 = eta_0 < ... < eta_K = 1
  Vector values;       // Psi at each breakpoint
  Vector slopes;       // slope on (eta_k, eta_{k+1})
};

inline constexpr double kProbeOffset = 1e-7;
inline constexpr int kMaxProfileDepth = 60;

double phi(const MatchingInstance& inst, const Vector& d, const Vector& s);
double psi(const MatchingInstance& inst, const MarketRates& rates, double eta);

/// Slope a^eta . beta from the duals of the solve at eta.
double psi_slope(const MatchingInstance& inst, const MarketRates& rates, double eta);

/// Exact piecewise-linear profile of Psi on [0, 1] by tangent-intersection
/// splitting; pieces whose slopes agree within tol are merged.
PsiProfile build_psi_profile(const MatchingInstance& inst, const MarketRates& rates, double tol);

double gte_fluid(const MatchingInstance& inst, const MarketRates& rates);
double gte_via_integral(const PsiProfile& profile);
/// Psi evaluated by interpolation on a profile.
double profile_value(const PsiProfile& profile, double eta);

enum class Direction { Left, Right };
enum class MarginalMethod { BruteForce, Duals };

struct MarginalValues {
  Vector values;
  std::vector<bool> right_fallback;  // left requested but d_i < 1
};

/// Right: Phi(d + e_i, s) - Phi(d, s). Left: Phi(d, s) - Phi(d - e_i, s).
/// MarginalMethod::Duals reads the solver duals when they are unique and d, s
/// are integral, and falls back to brute force otherwise.
MarginalValues marginal_values(const MatchingInstance& inst, const Vector& d, const Vector& s,
                               Direction direction,
                               MarginalMethod method = MarginalMethod::BruteForce);

/// d - epsilon for unit-type demand, 0 < epsilon < 1/n_d.
Vector perturb_demand(const Vector& d, double epsilon);

}  // namespace spdebias
