#include <cmath>
#include <random>

#include "doctest.h"
#include "kelly_ou/errors.hpp"
#include "kelly_ou/market_model.hpp"
#include "kelly_ou/rng.hpp"

using namespace kelly_ou;

namespace {

MarketParams fig1() { return MarketParams::single(0.5, 0.2, 0.1, 0.03, 10.0); }

MarketParams random_market(std::mt19937_64& rng, int n, double b_max = 2.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector a(n), b(n), s0(n);
  Matrix sigma(n, n);
  for (int i = 0; i < n; ++i) {
    a(i) = u(rng) - 0.3;
    b(i) = b_max * u(rng);
    s0(i) = 0.5 + 2.0 * u(rng);
    for (int j = 0; j < n; ++j) sigma(i, j) = 0.3 * (u(rng) - 0.5) + (i == j ? 0.2 : 0.0);
  }
  return MarketParams(a, b, sigma, 0.05 * u(rng), s0);
}

}  // namespace

TEST_CASE("drift at the reference single-asset state") {
  const auto m = fig1();
  const Vector mu = drift_mu(m, MarketState::initial(m));
  CHECK(mu(0) == doctest::Approx(0.5 - 0.2 * std::log(10.0) + 0.005).epsilon(1e-14));
  CHECK(std::abs(mu(0) - 0.0444829814) < 1e-10);
}

TEST_CASE("zero mean reversion gives a constant drift") {
  const auto m = MarketParams::single(0.5, 0.0, 0.1, 0.03, 1.0);
  for (double s : {0.1, 1.0, 50.0}) {
    const auto st = MarketState::at(m, 0.0, Vector::Constant(1, std::log(s)));
    CHECK(drift_mu(m, st)(0) == doctest::Approx(0.505).epsilon(1e-14));
  }
}

TEST_CASE("bidiagonal drift picks up half the row norms") {
  Matrix sigma{{0.1, 0.1}, {0.0, 0.1}};
  const MarketParams m(Vector::Zero(2), Vector::Zero(2), sigma, 0.0, Vector::Constant(2, 3.0));
  const Vector mu = drift_mu(m, MarketState::initial(m));
  CHECK(mu(0) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(mu(1) == doctest::Approx(0.005).epsilon(1e-14));
}

TEST_CASE("excess return is drift minus r") {
  const auto m = fig1();
  const auto st = MarketState::initial(m);
  CHECK(std::abs(excess_return(m, st)(0) - 0.0144829814) < 1e-10);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_market(rng, 3);
    const auto s = MarketState::initial(p);
    const Vector diff = excess_return(p, s) + Vector::Constant(3, p.r()) - drift_mu(p, s);
    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-16);
    Vector c(3);
    excess_return_into(p, s.x(), c);
    CHECK(c == excess_return(p, s));
  }

  const auto zero_rate = MarketParams::single(0.3, 0.1, 0.2, 0.0, 2.0);
  const auto s0 = MarketState::initial(zero_rate);
  CHECK(excess_return(zero_rate, s0)(0) == drift_mu(zero_rate, s0)(0));
}

TEST_CASE("excess return vanishes when the drift is forced to r") {
  const double r = 0.04, b = 0.3, sigma = 0.25, s = 7.0;
  const double a = r + b * std::log(s) - 0.5 * sigma * sigma;
  const auto m = MarketParams::single(a, b, sigma, r, s);
  CHECK(std::abs(excess_return(m, MarketState::initial(m))(0)) < 1e-16);
}

TEST_CASE("drift is affine in log-price with slope -b") {
  std::mt19937_64 rng(2);
  const auto m = random_market(rng, 4);
  const auto base = MarketState::initial(m);
  const double h = 1e-3;
  for (int i = 0; i < 4; ++i) {
    Vector x = base.x();
    x(i) += h;
    const Vector d = (drift_mu(m, MarketState::at(m, 0.0, x)) - drift_mu(m, base)) / h;
    for (int j = 0; j < 4; ++j) CHECK(std::abs(d(j) - (i == j ? -m.b()(i) : 0.0)) < 1e-9);
  }
}

TEST_CASE("exact transition mean matches the hand value and a fine Euler oracle") {
  const auto m = fig1();
  const auto st = MarketState::initial(m);
  const GaussianStep law = transition_law(m, st, 1.0);
  const double hand = std::exp(-0.2) * std::log(10.0) + 2.5 * (1.0 - std::exp(-0.2));
  CHECK(law.mean(0) == doctest::Approx(hand).epsilon(1e-14));
  // Hand evaluation to eight digits.
  CHECK(std::abs(law.mean(0) - 2.3383704) < 1e-7);
  CHECK(law.cov(0, 0) == doctest::Approx(0.01 * (1.0 - std::exp(-0.4)) / 0.4).epsilon(1e-14));

  // Composing many explicit Euler steps of the mean ODE converges to it.
  double x = std::log(10.0);
  const int steps = 100000;
  for (int k = 0; k < steps; ++k) x += (0.5 - 0.2 * x) / steps;
  CHECK(std::abs(x - law.mean(0)) < 1e-5);
}

TEST_CASE("one exact step agrees with Euler to second order in dt") {
  std::mt19937_64 rng(3);
  const double dt = 1e-4;
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_market(rng, 3);
    const auto st = MarketState::initial(m);
    const Vector exact = transition_law(m, st, dt).mean;
    for (int i = 0; i < 3; ++i) {
      const double drift = m.a()(i) - m.b()(i) * st.x()(i);
      const double euler = st.x()(i) + drift * dt;
      // Taylor: exact - euler = -b drift dt^2 / 2 + O(dt^3).
      const double bound = (0.5 * m.b()(i) * std::abs(drift) + 1e-6) * dt * dt + 1e-15;
      CHECK(std::abs(exact(i) - euler) <= bound);
    }
  }
}

TEST_CASE("zero mean reversion is arithmetic Brownian motion") {
  Matrix sigma{{0.2, 0.05}, {0.0, 0.3}};
  const MarketParams m(Vector{{0.1, -0.2}}, Vector::Zero(2), sigma, 0.01, Vector{{1.0, 2.0}});
  const auto st = MarketState::initial(m);
  const GaussianStep law = transition_law(m, st, 0.7);
  CHECK((law.mean - (st.x() + m.a() * 0.7)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((law.cov - m.covariance_rate() * 0.7).cwiseAbs().maxCoeff() < 1e-16);
}

TEST_CASE("long transitions approach the stationary law") {
  Matrix sigma{{0.2, 0.0}, {0.1, 0.3}};
  const MarketParams m(Vector{{0.1, 0.4}}, Vector{{0.5, 1.5}}, sigma, 0.0, Vector{{5.0, 0.2}});
  const GaussianStep law = transition_law(m, MarketState::initial(m), 200.0);
  CHECK((law.mean - stationary_mean_log(m)).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix& R = m.covariance_rate();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(std::abs(law.cov(i, j) - R(i, j) / (m.b()(i) + m.b()(j))) < 1e-14);
  }
}

TEST_CASE("transition laws compose over consecutive intervals") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = random_market(rng, 3, 2.0);
    if (trial % 5 == 0) {
      Vector b = m.b();
      b(trial % 3) = 0.0;
      m = MarketParams(m.a(), b, m.sigma(), m.r(), m.s0());
    }
    const double dt1 = 0.3 + 0.01 * trial, dt2 = 0.9;
    const auto st = MarketState::initial(m);
    const GaussianStep first = transition_law(m, st, dt1);
    const GaussianStep second = transition_law(m, MarketState::at(m, dt1, first.mean), dt2);
    const GaussianStep whole = transition_law(m, st, dt1 + dt2);
    const Vector decay = (-m.b() * dt2).array().exp().matrix();
    const Matrix composed = decay.asDiagonal() * first.cov * decay.asDiagonal() + second.cov;
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(second.mean(i) - whole.mean(i)) <= 1e-10 * std::max(1.0, std::abs(whole.mean(i))));
    }
    CHECK((composed - whole.cov).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("transition rejects non-positive dt") {
  const auto m = fig1();
  CHECK_THROWS_AS(transition_law(m, MarketState::initial(m), 0.0), ConfigError);
  CHECK_THROWS_AS(transition_law(m, MarketState::initial(m), -1.0), ConfigError);
  CHECK_THROWS_AS(OuPropagator(m, 0.0), ConfigError);
}

TEST_CASE("sample_step degenerate cases") {
  const auto m = fig1();
  const GaussianStep law = transition_law(m, MarketState::initial(m), 1.0);
  CHECK(sample_step(law, Vector::Zero(1)) == law.mean);

  GaussianStep flat{Vector{{1.0, 2.0}}, Matrix::Zero(2, 2)};
  CHECK(sample_step(flat, Vector{{3.0, -4.0}}) == flat.mean);
  CHECK_THROWS_AS(sample_step(flat, Vector::Zero(3)), ConfigError);
}

TEST_CASE("sample moments of one exact step") {
  const auto m = fig1();
  const GaussianStep law = transition_law(m, MarketState::initial(m), 1.0);
  const int n = 100000;
  PathStream rng(99, 0);
  Vector z(1);
  double sum = 0.0, sum_sq = 0.0;
  std::vector<double> draws(n);
  for (int k = 0; k < n; ++k) {
    rng.fill_normal(z);
    draws[k] = sample_step(law, z)(0);
    sum += draws[k];
  }
  const double mean = sum / n;
  for (double d : draws) sum_sq += (d - mean) * (d - mean);
  const double var = sum_sq / (n - 1);
  const double expected_var = 0.01 * (1.0 - std::exp(-0.4)) / 0.4;
  CHECK(std::abs(expected_var - 0.0082420) < 1e-7);
  CHECK(std::abs(mean - law.mean(0)) <= 3.0 * std::sqrt(expected_var / n));
  CHECK(std::abs(var - expected_var) <= 3.0 * expected_var * std::sqrt(2.0 / (n - 1)));
}

TEST_CASE("propagator matches transition_law plus sample_step") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = random_market(rng, 3);
    const double dt = 0.01 + 0.02 * trial;
    const OuPropagator prop(m, dt);
    Vector x(3), z(3), next(3), shock(3);
    for (int i = 0; i < 3; ++i) {
      x(i) = g(rng);
      z(i) = g(rng);
    }
    prop.step(x, z, next, shock);
    const GaussianStep law = transition_law(m, MarketState::at(m, 0.0, x), dt);
    CHECK((next - sample_step(law, z)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((shock - (next - law.mean)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((prop.mean(x) - law.mean).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("covariance factor reconstructs and clips round-off") {
  std::mt19937_64 rng(6);
  const auto m = random_market(rng, 4);
  const Matrix cov = transition_law(m, MarketState::initial(m), 0.5).cov;
  const Matrix L = covariance_factor(cov);
  CHECK((L * L.transpose() - cov).cwiseAbs().maxCoeff() < 1e-14);

  // Rank-one matrix with a round-off sized negative eigenvalue.
  const Vector v{{1.0, 2.0, 3.0}};
  Matrix almost = v * v.transpose();
  almost(0, 0) -= 1e-15;
  const Matrix Lr = covariance_factor(almost);
  CHECK(Lr.allFinite());
  CHECK((Lr * Lr.transpose() - almost).cwiseAbs().maxCoeff() < 1e-12);

  Matrix indefinite{{1.0, 0.0}, {0.0, -0.5}};
  CHECK_THROWS_AS(covariance_factor(indefinite), NumericalError);
}

TEST_CASE("stationary mean") {
  CHECK(stationary_mean_log(fig1())(0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(stationary_mean_log(MarketParams::single(0.0, 0.7, 0.1, 0.0, 1.0))(0) == 0.0);
  CHECK_THROWS_AS(stationary_mean_log(MarketParams::single(0.5, 0.0, 0.1, 0.0, 1.0)), NoStationaryDistribution);
}

TEST_CASE("long-run iterates average to the stationary mean and half row norms") {
  Matrix sigma{{0.1, 0.1}, {0.0, 0.1}};
  const MarketParams m(Vector{{0.1, 0.3}}, Vector{{0.5, 0.8}}, sigma, 0.0, Vector{{10.0, 0.1}});
  const OuPropagator prop(m, 5.0);
  const int n_paths = 20000;
  Vector x(2), next(2), shock(2), z(2), c(2);
  Vector sum_x = Vector::Zero(2), sum_x2 = Vector::Zero(2), sum_c = Vector::Zero(2), sum_c2 = Vector::Zero(2);
  for (int p = 0; p < n_paths; ++p) {
    PathStream rng(7, p);
    x = m.s0().array().log().matrix();
    for (int k = 0; k < 10; ++k) {
      rng.fill_normal(z);
      prop.step(x, z, next, shock);
      x = next;
    }
    excess_return_into(m, x, c);
    sum_x += x;
    sum_x2 += x.cwiseProduct(x);
    sum_c += c;
    sum_c2 += c.cwiseProduct(c);
  }
  const Vector target_x = stationary_mean_log(m);
  const Vector target_c = 0.5 * m.row_norms_sq();
  for (int i = 0; i < 2; ++i) {
    const double mx = sum_x(i) / n_paths, mc = sum_c(i) / n_paths;
    const double se_x = std::sqrt((sum_x2(i) / n_paths - mx * mx) / n_paths);
    const double se_c = std::sqrt((sum_c2(i) / n_paths - mc * mc) / n_paths);
    CHECK(std::abs(mx - target_x(i)) <= 3.0 * se_x);
    CHECK(std::abs(mc - target_c(i)) <= 3.0 * se_c);
  }
}

TEST_CASE("market parameter validation") {
  CHECK_THROWS_AS(MarketParams(Vector::Zero(2), Vector::Zero(1), Matrix::Identity(2, 2), 0.0, Vector::Ones(2)),
                  ConfigError);
  CHECK_THROWS_AS(MarketParams::single(0.1, -0.1, 0.2, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(MarketParams::single(0.1, 0.1, 0.2, 0.0, 0.0), ConfigError);
  CHECK_THROWS_AS(MarketParams::single(NAN, 0.1, 0.2, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(MarketParams(Vector::Zero(0), Vector::Zero(0), Matrix(0, 0), 0.0, Vector::Zero(0)), ConfigError);

  Matrix singular{{0.1, 0.2}, {0.2, 0.4}};
  const MarketParams m(Vector::Zero(2), Vector::Zero(2), singular, 0.0, Vector::Ones(2));
  CHECK(m.sigma_rank() == 1);
  CHECK_FALSE(m.full_rank());
  CHECK(fig1().full_rank());
}

TEST_CASE("market state keeps the savings account at exp(rt)") {
  const auto m = fig1();
  const auto st = MarketState::at(m, 3.0, Vector::Constant(1, 1.0));
  CHECK(st.bank() == doctest::Approx(std::exp(0.09)).epsilon(1e-15));
  CHECK(st.prices()(0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(MarketState::initial(m).bank() == 1.0);
  CHECK_THROWS_AS(MarketState::at(m, -1.0, Vector::Zero(1)), ConfigError);
  CHECK_THROWS_AS(MarketState::at(m, 0.0, Vector::Zero(2)), ConfigError);
}
