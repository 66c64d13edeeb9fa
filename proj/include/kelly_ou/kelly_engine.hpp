#pragma once

#include <optional>

#include "kelly_ou/market_model.hpp"
#include "kelly_ou/types.hpp"

namespace kelly_ou {

/// Fraction of total wealth held in each risky asset. The cash fraction is
/// 1 - total() and may be negative (leverage). `pseudo` marks fractions
/// obtained from the pseudoinverse of a singular R.
struct FractionVector {
  Vector f;
  bool pseudo = false;

  double total() const { return f.sum(); }
  double gross() const { return f.cwiseAbs().sum(); }
};

/// Units of the savings account (phi0) and of each asset (phi).
struct Holdings {
  double phi0 = 0.0;
  Vector phi;

  double value(double bank, const Vector& prices) const { return phi0 * bank + phi.dot(prices); }
};

/// Market price of risk theta, the solution of sigma theta = c.
struct RiskPremium {
  Vector theta;
};

/// Factorizations of sigma and R = sigma sigma^T for one market, reused
/// across many states. Rank is decided once at construction with the
/// relative singular-value cutoff 1e-10 * s_max.
class KellySolver {
 public:
  explicit KellySolver(const MarketParams& params);

  bool full_rank() const { return full_rank_; }
  int rank() const { return rank_; }
  Index n() const { return n_; }

  /// Throws SingularVolatility when sigma is rank deficient.
  RiskPremium price_of_risk(const Vector& c) const;
  /// out = sigma^{-1} v. Same failure mode as price_of_risk.
  void apply_sigma_inverse(const Vector& v, Vector& out) const;

  /// R^{-1} c, or the minimum-norm pseudoinverse solution when R is singular.
  FractionVector fraction(const Vector& c) const;
  void fraction_into(const Vector& c, Vector& out) const;

 private:
  Index n_;
  int rank_;
  bool full_rank_;
  Eigen::PartialPivLU<Matrix> sigma_lu_;
  Eigen::PartialPivLU<Matrix> cov_lu_;
  Matrix cov_pinv_;
};

RiskPremium market_price_of_risk(const MarketParams& params, const MarketState& state);
FractionVector kelly_fraction(const MarketParams& params, const MarketState& state);

/// Holdings that put fraction f_i of `wealth` in asset i and the rest in the
/// savings account: phi_i = f_i V / S_i, phi0 = (1 - sum f) V / B.
Holdings holdings_from_fractions(const Vector& f, double wealth, double bank, const Vector& prices);

/// Kelly-optimal replicating holdings. Throws SingularVolatility for a
/// rank-deficient sigma and std::invalid_argument for wealth <= 0.
Holdings replicating_holdings(const MarketParams& params, const MarketState& state, double wealth);

/// Reads fractions back from holdings: f_i = phi_i S_i / V.
Vector fractions_from_holdings(const Holdings& h, double wealth, const Vector& prices);

/// c^T x - 1/2 x^T R x. R must be symmetric to 1e-10.
double mean_variance_objective(const Vector& c, const Matrix& R, const Vector& x);

/// Instantaneous drift of log-wealth for fractions f: r + f^T c - 1/2 f^T R f.
double growth_rate(const MarketParams& params, const MarketState& state, const Vector& f);

}  // namespace kelly_ou
