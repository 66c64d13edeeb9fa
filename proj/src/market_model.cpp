#include "kelly_ou/market_model.hpp"

#include <cmath>
#include <string>

#include "kelly_ou/errors.hpp"

namespace kelly_ou {
namespace {

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

// (1 - e^{-k dt}) / k with the k -> 0 limit dt.
double decay_integral(double k, double dt) {
  if (k == 0.0) return dt;
  return -std::expm1(-k * dt) / k;
}

int numerical_rank(const Matrix& sigma) {
  if (sigma.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(sigma);
  const Vector& sv = svd.singularValues();
  const double cutoff = 1e-10 * sv(0);
  int rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) ++rank;
  }
  return rank;
}

}  // namespace

MarketParams::MarketParams(Vector a, Vector b, Matrix sigma, double r, Vector s0)
    : a_(std::move(a)), b_(std::move(b)), sigma_(std::move(sigma)), r_(r), s0_(std::move(s0)) {
  const Index n = a_.size();
  if (n < 1) throw ConfigError("market needs at least one asset");
  if (b_.size() != n || s0_.size() != n || sigma_.rows() != n || sigma_.cols() != n) {
    throw ConfigError("market dimensions disagree: a has " + std::to_string(n) + " entries");
  }
  if (!all_finite(a_) || !all_finite(b_) || !all_finite(sigma_) || !all_finite(s0_) ||
      !std::isfinite(r_)) {
    throw ConfigError("market parameters must be finite");
  }
  for (Index i = 0; i < n; ++i) {
    if (b_(i) < 0.0) throw ConfigError("mean-reversion rate b[" + std::to_string(i) + "] < 0");
    if (!(s0_(i) > 0.0)) throw ConfigError("initial price s0[" + std::to_string(i) + "] <= 0");
  }

  cov_rate_ = sigma_ * sigma_.transpose();
  const double asym = (cov_rate_ - cov_rate_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, cov_rate_.cwiseAbs().maxCoeff())) {
    throw NumericalError("sigma sigma^T is not symmetric");
  }
  cov_rate_ = 0.5 * (cov_rate_ + cov_rate_.transpose()).eval();
  row_norms_sq_ = sigma_.rowwise().squaredNorm();
  rank_ = numerical_rank(sigma_);
}

MarketParams MarketParams::single(double a, double b, double sigma, double r, double s0) {
  return MarketParams(Vector::Constant(1, a), Vector::Constant(1, b), Matrix::Constant(1, 1, sigma),
                      r, Vector::Constant(1, s0));
}

MarketState MarketState::at(const MarketParams& params, double t, Vector x) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("state time must be finite and >= 0");
  if (x.size() != params.n()) throw ConfigError("state dimension does not match market");
  if (!x.allFinite()) throw NumericalError("non-finite log-price in state");
  return MarketState(t, std::move(x), std::exp(params.r() * t));
}

MarketState MarketState::initial(const MarketParams& params) {
  return at(params, 0.0, params.s0().array().log().matrix());
}

Vector drift_mu(const MarketParams& params, const MarketState& state) {
  return (params.a().array() - params.b().array() * state.x().array() +
          0.5 * params.row_norms_sq().array())
      .matrix();
}

Vector excess_return(const MarketParams& params, const MarketState& state) {
  Vector c(params.n());
  excess_return_into(params, state.x(), c);
  return c;
}

void excess_return_into(const MarketParams& params, const Vector& x, Vector& out) {
  out = (params.a().array() - params.b().array() * x.array() +
         0.5 * params.row_norms_sq().array())
            .matrix();
  out.array() -= params.r();
}

GaussianStep transition_law(const MarketParams& params, const MarketState& state, double dt) {
  if (!(dt > 0.0)) throw ConfigError("transition horizon dt must be > 0");
  const Index n = params.n();
  GaussianStep law{Vector(n), Matrix(n, n)};
  for (Index i = 0; i < n; ++i) {
    const double bi = params.b()(i);
    law.mean(i) = std::exp(-bi * dt) * state.x()(i) + params.a()(i) * decay_integral(bi, dt);
  }
  const Matrix& R = params.covariance_rate();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      law.cov(i, j) = R(i, j) * decay_integral(params.b()(i) + params.b()(j), dt);
    }
  }
  return law;
}

Matrix covariance_factor(const Matrix& cov) {
  const Index n = cov.rows();
  if (n == 0) return Matrix(0, 0);
  const double scale = cov.cwiseAbs().maxCoeff();
  if (scale == 0.0) return Matrix::Zero(n, n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  Vector root(n);
  for (Index i = 0; i < n; ++i) {
    const double lambda = eig.eigenvalues()(i);
    if (lambda < -1e-12 * scale) {
      throw NumericalError("covariance is not positive semidefinite (eigenvalue " +
                           std::to_string(lambda) + ")");
    }
    root(i) = lambda > 0.0 ? std::sqrt(lambda) : 0.0;
  }
  return eig.eigenvectors() * root.asDiagonal();
}

Vector sample_step(const GaussianStep& law, const Vector& noise) {
  if (noise.size() != law.mean.size()) throw ConfigError("noise dimension does not match law");
  return law.mean + covariance_factor(law.cov) * noise;
}

Vector stationary_mean_log(const MarketParams& params) {
  Vector out(params.n());
  for (Index i = 0; i < params.n(); ++i) {
    if (params.b()(i) == 0.0) throw NoStationaryDistribution(static_cast<int>(i));
    out(i) = params.a()(i) / params.b()(i);
  }
  return out;
}

OuPropagator::OuPropagator(const MarketParams& params, double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw ConfigError("transition horizon dt must be > 0");
  const Index n = params.n();
  decay_.resize(n);
  offset_.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double bi = params.b()(i);
    decay_(i) = std::exp(-bi * dt);
    offset_(i) = params.a()(i) * decay_integral(bi, dt);
  }
  cov_ = transition_law(params, MarketState::initial(params), dt).cov;
  factor_ = covariance_factor(cov_);
}

Vector OuPropagator::mean(const Vector& x) const {
  return (decay_.array() * x.array() + offset_.array()).matrix();
}

void OuPropagator::step(const Vector& x, const Vector& z, Vector& x_next, Vector& shock) const {
  shock.noalias() = factor_ * z;
  x_next = (decay_.array() * x.array() + offset_.array() + shock.array()).matrix();
}

}  // namespace kelly_ou
