#include "kelly_ou/kelly_engine.hpp"

#include <cmath>
#include <stdexcept>

#include "kelly_ou/errors.hpp"

namespace kelly_ou {

KellySolver::KellySolver(const MarketParams& params)
    : n_(params.n()), rank_(params.sigma_rank()), full_rank_(params.full_rank()) {
  const Matrix& R = params.covariance_rate();
  if (full_rank_) {
    sigma_lu_.compute(params.sigma());
    cov_lu_.compute(R);
  } else {
    Eigen::JacobiSVD<Matrix> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
    Vector inv = Vector::Zero(sv.size());
    for (Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
    }
    cov_pinv_ = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  }
}

RiskPremium KellySolver::price_of_risk(const Vector& c) const {
  RiskPremium out{Vector(n_)};
  apply_sigma_inverse(c, out.theta);
  return out;
}

void KellySolver::apply_sigma_inverse(const Vector& v, Vector& out) const {
  if (!full_rank_) throw SingularVolatility(rank_, static_cast<int>(n_));
  out = sigma_lu_.solve(v);
}

FractionVector KellySolver::fraction(const Vector& c) const {
  FractionVector out{Vector(n_), !full_rank_};
  fraction_into(c, out.f);
  return out;
}

void KellySolver::fraction_into(const Vector& c, Vector& out) const {
  if (full_rank_) {
    out = cov_lu_.solve(c);
  } else {
    out.noalias() = cov_pinv_ * c;
  }
}

RiskPremium market_price_of_risk(const MarketParams& params, const MarketState& state) {
  return KellySolver(params).price_of_risk(excess_return(params, state));
}

FractionVector kelly_fraction(const MarketParams& params, const MarketState& state) {
  return KellySolver(params).fraction(excess_return(params, state));
}

Holdings holdings_from_fractions(const Vector& f, double wealth, double bank, const Vector& prices) {
  Holdings h;
  h.phi = (f.array() * wealth / prices.array()).matrix();
  h.phi0 = (1.0 - f.sum()) * wealth / bank;
  return h;
}

Holdings replicating_holdings(const MarketParams& params, const MarketState& state, double wealth) {
  if (!(wealth > 0.0)) throw std::invalid_argument("replicating holdings need wealth > 0");
  if (!params.full_rank()) throw SingularVolatility(params.sigma_rank(), static_cast<int>(params.n()));
  const FractionVector f = kelly_fraction(params, state);
  return holdings_from_fractions(f.f, wealth, state.bank(), state.prices());
}

Vector fractions_from_holdings(const Holdings& h, double wealth, const Vector& prices) {
  return (h.phi.array() * prices.array() / wealth).matrix();
}

double mean_variance_objective(const Vector& c, const Matrix& R, const Vector& x) {
  if (R.rows() != R.cols() || R.rows() != c.size() || x.size() != c.size()) {
    throw std::invalid_argument("mean_variance_objective: dimension mismatch");
  }
  if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("mean_variance_objective: R is not symmetric");
  }
  return c.dot(x) - 0.5 * x.dot(R * x);
}

double growth_rate(const MarketParams& params, const MarketState& state, const Vector& f) {
  return params.r() + mean_variance_objective(excess_return(params, state), params.covariance_rate(), f);
}

}  // namespace kelly_ou
