#include <cmath>

#include "doctest.h"
#include "kelly_ou/errors.hpp"
#include "kelly_ou/experiment_harness.hpp"
#include "kelly_ou/kelly_engine.hpp"

using namespace kelly_ou;

namespace {

EnsembleConfig small(int paths, int steps_per_unit) {
  EnsembleConfig e;
  e.n_paths = paths;
  e.steps_per_unit = steps_per_unit;
  return e;
}

void check_table_shape(const ExperimentReport& rep) {
  REQUIRE_FALSE(rep.table_header.empty());
  REQUIRE_FALSE(rep.table_rows.empty());
  for (const auto& row : rep.table_rows) CHECK(row.size() == rep.table_header.size());
}

}  // namespace

TEST_CASE("mean and standard error") {
  const MeanSe m = mean_se(Vector{{1.0, 2.0, 3.0, 4.0}});
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(m.count == 4);
}

TEST_CASE("report bookkeeping and json") {
  ExperimentReport rep;
  rep.name = "demo";
  rep.exact("a", 1.5);
  rep.estimate("b", 2.0, 0.1);
  rep.rule("ok", "always", true);
  CHECK(rep.passed());
  rep.rule("bad", "never", false, "why");
  CHECK_FALSE(rep.passed());
  CHECK(rep.failed_rules() == std::vector<std::string>{"bad"});
  CHECK(rep.metric("b").se == 0.1);
  CHECK_THROWS_AS(rep.metric("c"), std::out_of_range);
  CHECK_THROWS_AS(rep.find_rule("c"), std::out_of_range);
  rep.runtime_seconds = 12.0;
  const auto j = rep.to_json();
  CHECK(j["metrics"][0]["exact"] == true);
  CHECK_FALSE(j["metrics"][0].contains("se"));
  CHECK(j["metrics"][1]["se"] == 0.1);
  CHECK(j["passed"] == false);
  CHECK_FALSE(j.dump().find("runtime") != std::string::npos);
}

TEST_CASE("fig1 experiment at reduced size") {
  const ExperimentReport rep = fig1_experiment(5, small(2000, 50), 10.0);
  CHECK(rep.passed());
  CHECK(std::abs(rep.metric("initial_fraction").value - kFig1InitialFraction) <= 1e-9);
  CHECK(rep.metric("limit_expected_fraction").value == doctest::Approx(-2.5));
  CHECK(rep.table_header == std::vector<std::string>{"t", "S", "f", "V", "logV"});
  check_table_shape(rep);
  CHECK(rep.table_rows.front()[0] == 0.0);
  CHECK(rep.table_rows.front()[3] == kFig1InitialWealth);
  CHECK(rep.table_rows.back()[0] == doctest::Approx(10.0));
}

TEST_CASE("experiments are reproducible from the seed") {
  const auto a = fig1_experiment(21, small(300, 20), 2.0).to_json();
  const auto b = fig1_experiment(21, small(300, 20), 2.0).to_json();
  const auto c = fig1_experiment(22, small(300, 20), 2.0).to_json();
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("dominance in a GBM market") {
  const auto gbm = MarketParams::single(0.04, 0.0, 0.2, 0.03, 1.0);
  DominanceConfig config;
  config.horizons = {5.0, 20.0};
  config.ensemble = small(4000, 10);
  const ExperimentReport rep = dominance_experiment(gbm, config, 3);
  CHECK(rep.passed());
  const double theta = (0.04 + 0.02 - 0.03) / 0.2;
  CHECK(rep.metric("theta_sq").value == doctest::Approx(theta * theta).epsilon(1e-12));
  CHECK(rep.find_rule("kelly_maximal[T=20]").passed);
  CHECK(rep.find_rule("double_kelly_matches_cash[T=5]").passed);
  CHECK(rep.find_rule("win_probability_grows[lambda=0.5]").passed);
  check_table_shape(rep);
}

TEST_CASE("dominance configuration errors") {
  DominanceConfig config;
  config.lambdas = {0.5, 2.0};
  CHECK_THROWS_AS(dominance_experiment(fig1_market(), config, 1), ConfigError);
  config.lambdas = {1.0};
  config.horizons = {};
  CHECK_THROWS_AS(dominance_experiment(fig1_market(), config, 1), ConfigError);
  config.horizons = {-1.0};
  CHECK_THROWS_AS(dominance_experiment(fig1_market(), config, 1), ConfigError);
}

TEST_CASE("sensitivity ratio") {
  const auto m = MarketParams::single(0.05, 0.1, 0.2, 0.0, 1.0);
  const ExperimentReport rep = sensitivity_experiment(m, 1e-4);
  CHECK(rep.passed());
  CHECK(std::abs(rep.metric("elasticity_mu").value - 1.0) <= 1e-9);
  CHECK(std::abs(rep.metric("ratio").value + 2.0) <= 1e-3);
  // f = mu / sigma^2, so sigma -> sigma (1 + eps) scales f by (1 + eps)^-2.
  const double eps = 1e-4;
  CHECK(rep.metric("relative_change_sigma").value == doctest::Approx(std::pow(1.0 + eps, -2.0) - 1.0).epsilon(1e-9));

  const ExperimentReport zero = sensitivity_experiment(m, 0.0);
  CHECK(zero.passed());
  CHECK(zero.find_rule("zero_perturbation").passed);
}

TEST_CASE("sensitivity preconditions") {
  CHECK_THROWS_AS(sensitivity_experiment(fig1_market(), 1e-4), ConfigError);
  const MarketParams two(Vector::Zero(2), Vector::Zero(2), Matrix::Identity(2, 2) * 0.2, 0.0, Vector::Ones(2));
  CHECK_THROWS_AS(sensitivity_experiment(two, 1e-4), ConfigError);
  // c = 0 at the initial state: a - b log S0 + sigma^2 / 2 = 0.
  const auto flat = MarketParams::single(-0.125, 0.0, 0.5, 0.0, 1.0);
  CHECK_THROWS_AS(sensitivity_experiment(flat, 1e-4), ConfigError);
  const auto m = MarketParams::single(0.05, 0.1, 0.2, 0.0, 1.0);
  CHECK_THROWS_AS(sensitivity_experiment(m, -1.0), ConfigError);
  CHECK_THROWS_AS(sensitivity_experiment(m, std::nan("")), ConfigError);
}

TEST_CASE("equicorrelated volatility") {
  const Matrix s = equicorrelated_sigma(3, 0.2, 0.4);
  const Matrix r = s * s.transpose();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(r(i, j) == doctest::Approx(i == j ? 0.04 : 0.016).epsilon(1e-13));
  }
  CHECK_THROWS_AS(equicorrelated_sigma(3, 0.2, 1.0), ConfigError);
  CHECK_THROWS_AS(equicorrelated_sigma(3, 0.2, -0.5), ConfigError);
  CHECK_NOTHROW(equicorrelated_sigma(3, 0.2, -0.49));
  CHECK_THROWS_AS(equicorrelated_sigma(3, 0.0, 0.1), ConfigError);
}

TEST_CASE("two-asset leverage has the closed form c / ((1 + rho) vol^2)") {
  LeverageConfig config;
  config.n = 2;
  config.dispersion = 0.0;
  config.n_states = 10;
  config.rhos = {0.0, 0.5, 0.9};
  const ExperimentReport rep = leverage_correlation_experiment(config, 1);
  CHECK(rep.passed());
  for (const auto& [rho, key] : {std::pair{0.0, "0"}, std::pair{0.5, "0.5"}, std::pair{0.9, "0.9"}}) {
    const Metric& m = rep.metric(std::string("gross_same_sign[rho=") + key + "]");
    CHECK(m.value == doctest::Approx(2.0 * 0.02 / ((1.0 + rho) * 0.04)).epsilon(1e-12));
    CHECK(*m.se < 1e-14);
  }
  config.n = 1;
  CHECK_THROWS_AS(leverage_correlation_experiment(config, 1), ConfigError);
}

TEST_CASE("leverage trend with dispersed same-sign states") {
  const ExperimentReport rep = leverage_correlation_experiment(LeverageConfig{}, 4);
  CHECK(rep.passed());
  check_table_shape(rep);
}

TEST_CASE("structure limits at reduced size") {
  StructureLimitsConfig config;
  config.n_max = 3;
  config.ensemble = small(3000, 20);
  const ExperimentReport rep = structure_limits_experiment(config, 11);
  CHECK(rep.passed());
  CHECK(rep.table_header == std::vector<std::string>{"n", "closed_form_value", "oracle_value", "mc_value", "mc_se"});
  REQUIRE(rep.table_rows.size() == 2);
  CHECK(rep.table_rows[0][1] == 0.5);
  CHECK(rep.table_rows[1][1] == 1.0);
  config.b = 0.0;
  CHECK_THROWS_AS(structure_limits_experiment(config, 11), ConfigError);
  config.b = 0.5;
  config.n_min = 1;
  CHECK_THROWS_AS(structure_limits_experiment(config, 11), ConfigError);
}

TEST_CASE("triangular curve at reduced size") {
  TriangularCurveConfig config;
  config.ensemble = small(2000, 20);
  const ExperimentReport rep = triangular_curve_experiment(config, 9);
  CHECK(rep.passed());
  CHECK(rep.metric("limit_total_fraction").value == doctest::Approx(-2.5).epsilon(1e-12));
  CHECK(rep.metric("limit_total_fraction_b_zero").value == doctest::Approx(47.5).epsilon(1e-12));
  CHECK(rep.metric("max_total_minus_first_asset_fraction").value <= 1e-9);
  config.times = {0.0, 0.25, 1.0};
  config.ensemble.steps_per_unit = 2;
  CHECK_THROWS_AS(triangular_curve_experiment(config, 9), ConfigError);
}

TEST_CASE("martingale battery at reduced size") {
  const Matrix sigma{{0.2, 0.0}, {0.05, 0.3}};
  const MarketParams m(Vector{{0.1, 0.0}}, Vector{{0.3, 0.2}}, sigma, 0.02, Vector{{1.0, 2.0}});
  MartingaleConfig config;
  config.n_paths = 4000;
  config.n_steps = 50;
  config.n_checkpoints = 2;
  const ExperimentReport rep = martingale_experiment(m, config, 17);
  CHECK(rep.passed());
  CHECK(rep.find_rule("log_euler_equals_density_form").passed);
  CHECK(rep.table_rows.size() == 2);
  config.n_checkpoints = 0;
  CHECK_THROWS_AS(martingale_experiment(m, config, 17), ConfigError);
}

TEST_CASE("scheme convergence rules are reported per step size") {
  SchemeConvergenceConfig config;
  config.n_paths = 2000;
  config.doublings = 1;
  const ExperimentReport rep = scheme_convergence_experiment(fig1_market(), config, 1);
  CHECK(rep.find_rule("self_financing[steps=25]").passed);
  CHECK(rep.find_rule("self_financing[steps=50]").passed);
  CHECK_NOTHROW(rep.find_rule("gap_halves[25->50]"));
  CHECK(rep.table_rows.size() == 2);
  config.doublings = 0;
  CHECK_THROWS_AS(scheme_convergence_experiment(fig1_market(), config, 1), ConfigError);
}

TEST_CASE("serial and parallel execution give identical reports") {
  EnsembleConfig e = small(500, 20);
  e.execution = Execution::serial;
  const auto serial = fig1_experiment(7, e, 3.0).to_json();
  e.execution = Execution::parallel;
  CHECK(fig1_experiment(7, e, 3.0).to_json() == serial);
}
