#include "spdebias/market.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spdebias {

MarketRates MarketRates::from_intent(const Vector& lambda_tilde, const Vector& p, const Vector& q,
                                     const Vector& pi) {
  if (p.size() != lambda_tilde.size() || q.size() != lambda_tilde.size()) {
    throw Error(ErrorCode::DimensionMismatch, "intent vectors differ in length");
  }
  MarketRates rates;
  rates.pi = pi;
  rates.lambda.resize(lambda_tilde.size());
  rates.beta.resize(lambda_tilde.size());
  for (std::size_t i = 0; i < lambda_tilde.size(); ++i) {
    if (p[i] < 0.0 || p[i] > 1.0 || q[i] < -p[i] || q[i] > 1.0 - p[i]) {
      throw Error(ErrorCode::InvalidArgument, "intent probabilities out of range");
    }
    rates.lambda[i] = lambda_tilde[i] * p[i];
    rates.beta[i] = lambda_tilde[i] * q[i];
  }
  rates.lambda_tilde = lambda_tilde;
  rates.p = p;
  rates.q = q;
  return rates;
}

void MarketRates::validate(const MatchingInstance& inst) const {
  const auto n_d = static_cast<std::size_t>(inst.n_d());
  if (lambda.size() != n_d || beta.size() != n_d ||
      pi.size() != static_cast<std::size_t>(inst.n_s())) {
    throw Error(ErrorCode::DimensionMismatch, "rates do not match instance dimensions");
  }
  for (std::size_t i = 0; i < n_d; ++i) {
    if (!(lambda[i] >= 0.0) || !std::isfinite(beta[i]) || lambda[i] + beta[i] < -1e-12) {
      throw Error(ErrorCode::InvalidArgument, "rates need lambda >= 0 and lambda + beta >= 0");
    }
  }
  for (double rate : pi) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) {
      throw Error(ErrorCode::InvalidArgument, "supply rates must be finite and >= 0");
    }
  }
  if (lambda_tilde && p && q) {
    for (std::size_t i = 0; i < n_d; ++i) {
      const double lt = (*lambda_tilde)[i];
      const double rel = 1e-12 * std::max(1.0, std::abs(lt));
      if (std::abs(lt * (*p)[i] - lambda[i]) > rel || std::abs(lt * (*q)[i] - beta[i]) > rel) {
        throw Error(ErrorCode::InvalidArgument, "intent decomposition inconsistent with rates");
      }
    }
  }
}

bool MarketRates::sign_consistent() const {
  const bool nonneg = std::all_of(beta.begin(), beta.end(), [](double b) { return b >= 0.0; });
  const bool nonpos = std::all_of(beta.begin(), beta.end(), [](double b) { return b <= 0.0; });
  return nonneg || nonpos;
}

Vector MarketRates::demand_at(double eta) const {
  Vector d(lambda.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::max(0.0, lambda[i] + eta * beta[i]);
  return d;
}

double phi(const MatchingInstance& inst, const Vector& d, const Vector& s) {
  return solve_matching(inst, d, s).objective;
}

double psi(const MatchingInstance& inst, const MarketRates& rates, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "eta must lie in [0, 1]");
  }
  return phi(inst, rates.demand_at(eta), rates.pi);
}

double psi_slope(const MatchingInstance& inst, const MarketRates& rates, double eta) {
  const SolveResult r = solve_matching(inst, rates.demand_at(eta), rates.pi);
  return dot(r.a, rates.beta);
}

namespace {

struct Piece {
  double eta_l;
  double eta_r;
  double psi_l;
  double psi_r;
};

class ProfileBuilder {
 public:
  ProfileBuilder(const MatchingInstance& inst, const MarketRates& rates, double tol)
      : inst_(inst), rates_(rates), tol_(tol) {}

  double value(double eta) { return phi(inst_, rates_.demand_at(eta), rates_.pi); }

  // Right-derivative at eta (probe inside (eta, limit)).
  double slope_right(double eta, double limit) {
    const double probe = std::min(eta + kProbeOffset, 0.5 * (eta + limit));
    return psi_slope(inst_, rates_, probe);
  }
  double slope_left(double eta, double limit) {
    const double probe = std::max(eta - kProbeOffset, 0.5 * (eta + limit));
    return psi_slope(inst_, rates_, probe);
  }

  void refine(double eta_l, double eta_r, double psi_l, double psi_r, double m_l, double m_r,
              int depth) {
    if (depth > kMaxProfileDepth) {
      throw Error(ErrorCode::MaxDepthExceeded, "Psi profile recursion exceeded depth limit");
    }
    const double width = eta_r - eta_l;
    const double secant = (psi_r - psi_l) / width;
    const double scale = std::max({1.0, std::abs(psi_l), std::abs(psi_r)});
    const double tol = tol_ * scale;
    if (std::abs(m_l - m_r) <= tol && std::abs(secant - m_l) * width <= tol &&
        std::abs(secant - m_r) * width <= tol) {
      pieces_.push_back({eta_l, eta_r, psi_l, psi_r});
      return;
    }

    // Tangent lines from both ends meet at the only possible kink when there
    // is exactly one; otherwise Psi there lies strictly below both lines.
    double split = 0.5 * (eta_l + eta_r);
    if (m_l - m_r > tol / width) {
      const double cross = (psi_r - psi_l + m_l * eta_l - m_r * eta_r) / (m_l - m_r);
      const double margin = 4.0 * kProbeOffset;
      if (cross > eta_l + margin && cross < eta_r - margin) split = cross;
    }
    const double psi_split = value(split);
    const double line_l = psi_l + m_l * (split - eta_l);
    const double line_r = psi_r + m_r * (split - eta_r);
    if (std::abs(psi_split - line_l) <= tol && std::abs(psi_split - line_r) <= tol) {
      pieces_.push_back({eta_l, split, psi_l, psi_split});
      pieces_.push_back({split, eta_r, psi_split, psi_r});
      return;
    }
    const double m_split_l = slope_left(split, eta_l);
    const double m_split_r = slope_right(split, eta_r);
    refine(eta_l, split, psi_l, psi_split, m_l, m_split_l, depth + 1);
    refine(split, eta_r, psi_split, psi_r, m_split_r, m_r, depth + 1);
  }

  PsiProfile finish() const {
    PsiProfile profile;
    profile.breakpoints.push_back(pieces_.front().eta_l);
    profile.values.push_back(pieces_.front().psi_l);
    for (const Piece& piece : pieces_) {
      const double slope = (piece.psi_r - piece.psi_l) / (piece.eta_r - piece.eta_l);
      if (!profile.slopes.empty()) {
        const double scale = std::max(1.0, std::abs(piece.psi_r));
        if (std::abs(slope - profile.slopes.back()) <= tol_ * scale) {
          // Collinear with the previous piece: extend it.
          profile.breakpoints.back() = piece.eta_r;
          profile.values.back() = piece.psi_r;
          const std::size_t k = profile.slopes.size() - 1;
          profile.slopes.back() = (profile.values[k + 1] - profile.values[k]) /
                                  (profile.breakpoints[k + 1] - profile.breakpoints[k]);
          continue;
        }
      }
      profile.slopes.push_back(slope);
      profile.breakpoints.push_back(piece.eta_r);
      profile.values.push_back(piece.psi_r);
    }
    return profile;
  }

 private:
  const MatchingInstance& inst_;
  const MarketRates& rates_;
  double tol_;
  std::vector<Piece> pieces_;
};

}  // namespace

PsiProfile build_psi_profile(const MatchingInstance& inst, const MarketRates& rates, double tol) {
  rates.validate(inst);
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "profile tolerance must be positive");
  ProfileBuilder builder(inst, rates, tol);
  const double psi0 = builder.value(0.0);
  const double psi1 = builder.value(1.0);
  const double m0 = builder.slope_right(0.0, 1.0);
  const double m1 = builder.slope_left(1.0, 0.0);
  builder.refine(0.0, 1.0, psi0, psi1, m0, m1, 0);
  return builder.finish();
}

double gte_fluid(const MatchingInstance& inst, const MarketRates& rates) {
  rates.validate(inst);
  return phi(inst, rates.demand_at(1.0), rates.pi) - phi(inst, rates.lambda, rates.pi);
}

double gte_via_integral(const PsiProfile& profile) {
  double total = 0.0;
  for (std::size_t k = 0; k < profile.slopes.size(); ++k) {
    total += profile.slopes[k] * (profile.breakpoints[k + 1] - profile.breakpoints[k]);
  }
  return total;
}

double profile_value(const PsiProfile& profile, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorCode::OutOfRange, "eta must lie in [0, 1]");
  const auto it = std::upper_bound(profile.breakpoints.begin(), profile.breakpoints.end(), eta);
  std::size_t k = it == profile.breakpoints.begin()
                      ? 0
                      : static_cast<std::size_t>(it - profile.breakpoints.begin()) - 1;
  k = std::min(k, profile.slopes.size() - 1);
  return profile.values[k] + profile.slopes[k] * (eta - profile.breakpoints[k]);
}

namespace {

bool integral(const Vector& values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return x == std::floor(x); });
}

}  // namespace

MarginalValues marginal_values(const MatchingInstance& inst, const Vector& d, const Vector& s,
                               Direction direction, MarginalMethod method) {
  const SolveResult base = solve_matching(inst, d, s);
  MarginalValues out;
  out.values.assign(inst.n_d(), 0.0);
  out.right_fallback.assign(inst.n_d(), false);

  const bool from_duals =
      method == MarginalMethod::Duals && base.dual_unique_hint && integral(d) && integral(s);
  for (int i = 0; i < inst.n_d(); ++i) {
    const bool left = direction == Direction::Left && d[i] >= 1.0;
    out.right_fallback[i] = direction == Direction::Left && !left;
    if (from_duals) {
      out.values[i] = base.a[i];
      continue;
    }
    Vector shifted = d;
    if (left) {
      shifted[i] -= 1.0;
      out.values[i] = base.objective - phi(inst, shifted, s);
    } else {
      shifted[i] += 1.0;
      out.values[i] = phi(inst, shifted, s) - base.objective;
    }
  }
  return out;
}

Vector perturb_demand(const Vector& d, double epsilon) {
  if (d.empty()) throw Error(ErrorCode::DimensionMismatch, "empty demand vector");
  const double limit = 1.0 / static_cast<double>(d.size());
  if (!(epsilon > 0.0 && epsilon < limit)) {
    throw Error(ErrorCode::EpsilonOutOfRange,
                "epsilon must lie in (0, 1/n_d) = (0, " + std::to_string(limit) + ")");
  }
  for (double value : d) {
    if (value != 1.0) {
      throw Error(ErrorCode::InvalidArgument, "perturbation applies to unit-type demand");
    }
  }
  Vector out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i] - epsilon;
  return out;
}

}  // namespace spdebias
