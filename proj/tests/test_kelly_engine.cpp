#include <cmath>
#include <random>

#include "doctest.h"
#include "kelly_ou/errors.hpp"
#include "kelly_ou/kelly_engine.hpp"

using namespace kelly_ou;

namespace {

MarketParams fig1() { return MarketParams::single(0.5, 0.2, 0.1, 0.03, 10.0); }

Matrix random_sigma(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Matrix s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s(i, j) = 0.1 * g(rng) + (i == j ? 0.3 : 0.0);
  }
  return s;
}

MarketParams random_market(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector a(n), b(n), s0(n);
  for (int i = 0; i < n; ++i) {
    a(i) = u(rng) - 0.5;
    b(i) = u(rng);
    s0(i) = 0.5 + u(rng);
  }
  return MarketParams(a, b, random_sigma(rng, n), 0.03 * u(rng), s0);
}

}  // namespace

TEST_CASE("reference single-asset fraction, premium and holdings") {
  const auto m = fig1();
  const auto st = MarketState::initial(m);
  const double c = 0.5 - 0.2 * std::log(10.0) + 0.005 - 0.03;

  const FractionVector f = kelly_fraction(m, st);
  CHECK_FALSE(f.pseudo);
  CHECK(f.f(0) == doctest::Approx(c / 0.01).epsilon(1e-13));
  CHECK(std::abs(f.f(0) - 1.44829814) <= 1e-9);

  const RiskPremium th = market_price_of_risk(m, st);
  CHECK(th.theta(0) == doctest::Approx(c / 0.1).epsilon(1e-13));
  CHECK(std::abs(th.theta(0) - 0.144829814) <= 1e-9);

  const Holdings h = replicating_holdings(m, st, 10.0);
  CHECK(h.phi(0) == doctest::Approx(f.f(0) * 10.0 / 10.0).epsilon(1e-13));
  CHECK(std::abs(h.phi0 - (-4.4829814)) <= 1e-8);
  CHECK(std::abs(h.value(st.bank(), st.prices()) - 10.0) <= 1e-12 * 10.0);
}

TEST_CASE("growth rate at zero, Kelly and double Kelly") {
  const auto m = fig1();
  const auto st = MarketState::initial(m);
  const Vector f = kelly_fraction(m, st).f;
  const double theta = market_price_of_risk(m, st).theta(0);
  CHECK(growth_rate(m, st, Vector::Zero(1)) == 0.03);
  CHECK(growth_rate(m, st, f) == doctest::Approx(0.03 + 0.5 * theta * theta).epsilon(1e-14));
  CHECK(std::abs(growth_rate(m, st, f) - 0.040487838) < 1e-9);
  CHECK(std::abs(growth_rate(m, st, 2.0 * f) - 0.03) < 1e-15);
  CHECK(std::abs(2.0 * f(0) - 2.89659628) < 1e-8);
}

TEST_CASE("mean-variance objective examples") {
  const Vector c = Vector::Constant(1, 0.0144829814);
  const Matrix R = Matrix::Constant(1, 1, 0.01);
  CHECK(mean_variance_objective(c, R, Vector::Zero(1)) == 0.0);
  const double f = 1.44829814;
  const double value = mean_variance_objective(c, R, Vector::Constant(1, f));
  CHECK(value == doctest::Approx(0.5 * 0.0144829814 * 0.0144829814 / 0.01).epsilon(1e-12));
  CHECK(std::abs(value - 0.010487838) < 1e-9);

  Matrix asym{{1.0, 0.5}, {0.4, 1.0}};
  CHECK_THROWS_AS(mean_variance_objective(Vector::Zero(2), asym, Vector::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(mean_variance_objective(Vector::Zero(3), Matrix::Identity(2, 2), Vector::Zero(2)),
                  std::invalid_argument);
}

TEST_CASE("two-asset triangular fractions from a brute-force inverse") {
  const double s = 0.1;
  Matrix sigma{{s, 0.0}, {s, s}};
  // Choose a so that c_hat = (mu - r) / s^2 = (1, 2) at x = 0.
  const double r = 0.01;
  const Vector row_sq = sigma.rowwise().squaredNorm();
  Vector a(2);
  a(0) = 1.0 * s * s + r - 0.5 * row_sq(0);
  a(1) = 2.0 * s * s + r - 0.5 * row_sq(1);
  const MarketParams m(a, Vector::Zero(2), sigma, r, Vector::Ones(2));
  const auto st = MarketState::initial(m);

  // R = [[s^2, s^2], [s^2, 2 s^2]], det = s^4, inverse = [[2, -1], [-1, 1]] / s^2.
  const Matrix inv = Matrix{{2.0, -1.0}, {-1.0, 1.0}} / (s * s);
  const Vector expected = inv * excess_return(m, st);
  const Vector f = kelly_fraction(m, st).f;
  CHECK(std::abs(f(0) - 0.0) < 1e-12);
  CHECK(std::abs(f(1) - 1.0) < 1e-12);
  CHECK((f - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero excess return and identity volatility") {
  const double r = 0.02, b = 0.4, sigma = 0.3, s = 2.0;
  const auto m = MarketParams::single(r + b * std::log(s) - 0.5 * sigma * sigma, b, sigma, r, s);
  const auto st = MarketState::initial(m);
  CHECK(std::abs(kelly_fraction(m, st).f(0)) < 1e-14);
  CHECK(std::abs(market_price_of_risk(m, st).theta(0)) < 1e-14);
  CHECK(std::abs(growth_rate(m, st, kelly_fraction(m, st).f) - r) < 1e-15);

  const MarketParams eye(Vector{{0.3, -0.1, 0.2}}, Vector{{0.1, 0.2, 0.0}}, Matrix::Identity(3, 3), 0.01,
                         Vector{{1.0, 2.0, 3.0}});
  const auto st3 = MarketState::initial(eye);
  CHECK((market_price_of_risk(eye, st3).theta - excess_return(eye, st3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("Kelly fraction maximizes the mean-variance objective") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = random_market(rng, n);
      const auto st = MarketState::initial(m);
      const Vector c = excess_return(m, st);
      const Matrix& R = m.covariance_rate();
      const Vector f = kelly_fraction(m, st).f;
      const double best = mean_variance_objective(c, R, f);
      CHECK(best == doctest::Approx(0.5 * c.dot(R.ldlt().solve(c))).epsilon(1e-9));
      const double lambda_min = Eigen::SelfAdjointEigenSolver<Matrix>(R).eigenvalues().minCoeff();
      for (int k = 0; k < 10; ++k) {
        Vector delta(n);
        for (int i = 0; i < n; ++i) delta(i) = 0.1 * g(rng);
        const double perturbed = mean_variance_objective(c, R, f + delta);
        CHECK(perturbed < best);
        CHECK(best - perturbed >= 0.5 * lambda_min * delta.squaredNorm() * (1.0 - 1e-8) - 1e-15);
      }
    }
  }
}

TEST_CASE("f*.c equals |theta|^2") {
  std::mt19937_64 rng(12);
  for (int n = 1; n <= 6; ++n) {
    const auto m = random_market(rng, n);
    const auto st = MarketState::initial(m);
    const Vector c = excess_return(m, st);
    const double lhs = kelly_fraction(m, st).f.dot(c);
    const double rhs = market_price_of_risk(m, st).theta.squaredNorm();
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("scaling sigma with c held fixed scales f* by 1/k^2") {
  std::mt19937_64 rng(13);
  const int n = 3;
  const Matrix sigma = random_sigma(rng, n);
  const Vector c_target{{0.02, -0.01, 0.03}};
  const double r = 0.01;
  for (double k : {0.5, 2.0, 3.0}) {
    auto market_for = [&](const Matrix& s) {
      // With b = 0, a = c + r - 1/2 |sigma_i|^2 pins the excess return.
      const Vector a = (c_target.array() + r - 0.5 * s.rowwise().squaredNorm().array()).matrix();
      return MarketParams(a, Vector::Zero(n), s, r, Vector::Ones(n));
    };
    const auto base = market_for(sigma);
    const auto scaled = market_for(k * sigma);
    const Vector f1 = kelly_fraction(base, MarketState::initial(base)).f;
    const Vector fk = kelly_fraction(scaled, MarketState::initial(scaled)).f;
    CHECK((fk - f1 / (k * k)).cwiseAbs().maxCoeff() < 1e-10 * f1.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("singular volatility: pseudo-inverse fractions and refused premium") {
  Matrix sigma{{0.1, 0.2, 0.0}, {0.2, 0.4, 0.0}, {0.0, 0.0, 0.3}};
  const MarketParams m(Vector{{0.05, 0.1, 0.02}}, Vector{{0.1, 0.1, 0.1}}, sigma, 0.01, Vector{{1.0, 1.5, 2.0}});
  const auto st = MarketState::initial(m);
  CHECK(m.sigma_rank() == 2);

  const FractionVector f = kelly_fraction(m, st);
  CHECK(f.pseudo);
  const Vector c = excess_return(m, st);
  const Matrix& R = m.covariance_rate();
  const Matrix R_pinv = Eigen::CompleteOrthogonalDecomposition<Matrix>(R).pseudoInverse();
  const Vector projected = R * R_pinv * c;
  CHECK((R * f.f - projected).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((f.f - R_pinv * c).cwiseAbs().maxCoeff() < 1e-8);
  // Minimum norm: no component along the null direction (2, -1, 0).
  CHECK(std::abs(f.f.dot(Vector{{2.0, -1.0, 0.0}})) < 1e-8);

  try {
    market_price_of_risk(m, st);
    FAIL("expected SingularVolatility");
  } catch (const SingularVolatility& e) {
    CHECK(e.rank() == 2);
    CHECK(e.dimension() == 3);
  }
  CHECK_THROWS_AS(replicating_holdings(m, st, 1.0), SingularVolatility);
}

TEST_CASE("holdings round trip") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int n = 1; n <= 5; ++n) {
    const auto m = random_market(rng, n);
    const auto st = MarketState::at(m, 2.5, (m.s0().array().log() + 0.3).matrix());
    const double wealth = u(rng);
    const Holdings h = replicating_holdings(m, st, wealth);
    CHECK(std::abs(h.value(st.bank(), st.prices()) - wealth) <= 1e-12 * wealth);
    const Vector f = kelly_fraction(m, st).f;
    const Vector back = fractions_from_holdings(h, wealth, st.prices());
    CHECK((back - f).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, f.cwiseAbs().maxCoeff()));
  }
  const auto m = fig1();
  const auto st = MarketState::initial(m);
  const Holdings cash = holdings_from_fractions(Vector::Zero(1), 5.0, 2.0, st.prices());
  CHECK(cash.phi(0) == 0.0);
  CHECK(cash.phi0 == 2.5);
  CHECK_THROWS_AS(replicating_holdings(m, st, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(replicating_holdings(m, st, -1.0), std::invalid_argument);
}

TEST_CASE("solver reuse matches the free functions") {
  std::mt19937_64 rng(15);
  const auto m = random_market(rng, 4);
  const KellySolver solver(m);
  CHECK(solver.full_rank());
  CHECK(solver.rank() == 4);
  std::normal_distribution<double> g;
  for (int k = 0; k < 20; ++k) {
    Vector x(4);
    for (int i = 0; i < 4; ++i) x(i) = g(rng);
    const auto st = MarketState::at(m, 0.0, x);
    const Vector c = excess_return(m, st);
    Vector out(4), theta(4);
    solver.fraction_into(c, out);
    solver.apply_sigma_inverse(c, theta);
    CHECK((out - kelly_fraction(m, st).f).cwiseAbs().maxCoeff() == 0.0);
    CHECK((theta - market_price_of_risk(m, st).theta).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.sigma() * theta - c).cwiseAbs().maxCoeff() < 1e-13);
  }
}
