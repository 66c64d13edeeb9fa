#pragma once

#include "kelly_ou/types.hpp"

namespace kelly_ou {

/// Parameters of an n-asset market whose log-prices follow
///
///   dx = (a - b x) dt + sigma dW,   S_i = exp(x_i),
///
/// next to a savings account growing at the constant short rate r.
/// b acts as a diagonal matrix. Rank-deficient sigma is accepted here and
/// reported through sigma_rank(); operations that need sigma^{-1} refuse it.
class MarketParams {
 public:
  MarketParams(Vector a, Vector b, Matrix sigma, double r, Vector s0);

  Index n() const { return a_.size(); }
  const Vector& a() const { return a_; }
  const Vector& b() const { return b_; }
  const Matrix& sigma() const { return sigma_; }
  double r() const { return r_; }
  const Vector& s0() const { return s0_; }

  /// R = sigma sigma^T, the instantaneous covariance rate of log-returns.
  const Matrix& covariance_rate() const { return cov_rate_; }
  /// ||sigma_i||^2 for every row i.
  const Vector& row_norms_sq() const { return row_norms_sq_; }

  int sigma_rank() const { return rank_; }
  bool full_rank() const { return rank_ == n(); }

  /// Single-asset convenience constructor.
  static MarketParams single(double a, double b, double sigma, double r, double s0);

 private:
  Vector a_;
  Vector b_;
  Matrix sigma_;
  double r_;
  Vector s0_;
  Matrix cov_rate_;
  Vector row_norms_sq_;
  int rank_ = 0;
};

/// Time, log-prices and savings-account value. bank is always exp(r t).
class MarketState {
 public:
  static MarketState at(const MarketParams& params, double t, Vector x);
  static MarketState initial(const MarketParams& params);

  double t() const { return t_; }
  const Vector& x() const { return x_; }
  double bank() const { return bank_; }
  Vector prices() const { return x_.array().exp().matrix(); }

 private:
  MarketState(double t, Vector x, double bank) : t_(t), x_(std::move(x)), bank_(bank) {}

  double t_;
  Vector x_;
  double bank_;
};

/// One-step Gaussian law of x over a horizon dt.
struct GaussianStep {
  Vector mean;
  Matrix cov;
};

Vector drift_mu(const MarketParams& params, const MarketState& state);
Vector excess_return(const MarketParams& params, const MarketState& state);

/// Excess return evaluated directly on log-prices; the hot-loop form of
/// excess_return that skips building a MarketState.
void excess_return_into(const MarketParams& params, const Vector& x, Vector& out);

GaussianStep transition_law(const MarketParams& params, const MarketState& state, double dt);

/// Factor L with L L^T = cov. Eigenvalues in (-1e-12 scale, 0) are clipped
/// to zero; anything more negative throws NumericalError.
Matrix covariance_factor(const Matrix& cov);

Vector sample_step(const GaussianStep& law, const Vector& noise);

Vector stationary_mean_log(const MarketParams& params);

/// Exact transition over a fixed dt with the covariance factor cached.
/// step(x, z) == sample_step(transition_law(x, dt), z) up to rounding.
class OuPropagator {
 public:
  OuPropagator(const MarketParams& params, double dt);

  double dt() const { return dt_; }
  const Vector& decay() const { return decay_; }
  const Vector& offset() const { return offset_; }
  const Matrix& cov() const { return cov_; }
  const Matrix& factor() const { return factor_; }

  Vector mean(const Vector& x) const;

  /// x_next = decay .* x + offset + L z. Writes the martingale part L z into
  /// shock so callers can reuse the realized noise.
  void step(const Vector& x, const Vector& z, Vector& x_next, Vector& shock) const;

 private:
  double dt_;
  Vector decay_;
  Vector offset_;
  Matrix cov_;
  Matrix factor_;
};

}  // namespace kelly_ou
