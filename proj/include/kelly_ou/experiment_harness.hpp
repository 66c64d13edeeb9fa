#pragma once

#include <cstdint>
#include <vector>

#include "kelly_ou/market_model.hpp"
#include "kelly_ou/report.hpp"
#include "kelly_ou/structure_analytics.hpp"
#include "kelly_ou/wealth_sim.hpp"

namespace kelly_ou {

/// Sample mean and its standard error.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  int count = 0;
};

MeanSe mean_se(const Eigen::Ref<const Vector>& values);

struct EnsembleConfig {
  int n_paths = 10000;
  int steps_per_unit = 100;
  Execution execution = Execution::parallel;
};

/// Single-asset market of the reference figure: a=0.5, b=0.2, sigma=0.1,
/// r=0.03, S0=10 (simulated with V0=10).
MarketParams fig1_market();
inline constexpr double kFig1InitialWealth = 10.0;
inline constexpr double kFig1InitialFraction = 1.44829814;

/// Market with a structured sigma and scalar a, b, s0 broadcast to n assets.
MarketParams structured_market(const StructureKind& kind, double a, double b, double r, double s0);

/// Sample path of (S, f*, V*) plus ensemble statistics of f*_t against the
/// closed-form expected fraction.
ExperimentReport fig1_experiment(std::uint64_t seed, const EnsembleConfig& ensemble = {},
                                 double horizon = 20.0);

struct DominanceConfig {
  std::vector<double> lambdas{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> horizons{10.0, 40.0};
  double initial_wealth = 1.0;
  EnsembleConfig ensemble;
};

/// Scaled-Kelly strategies on common random numbers. Pass rules: lambda = 1
/// has the largest mean log-wealth (paired, 3 SE); P(V_kelly > V_lambda)
/// grows with the horizon for lambda in {0.5, 2}; in a GBM market (all
/// b = 0) each growth rate matches r + (lambda - lambda^2/2)|theta|^2.
ExperimentReport dominance_experiment(const MarketParams& params, const DominanceConfig& config,
                                      std::uint64_t seed);

/// Elasticities of f* = mu / sigma^2 under mu -> mu(1+eps) and
/// sigma -> sigma(1+eps). Requires a single asset and r = 0.
ExperimentReport sensitivity_experiment(const MarketParams& params, double epsilon);

struct LeverageConfig {
  int n = 3;
  std::vector<double> rhos{0.0, 0.25, 0.5, 0.75};
  int n_states = 1000;
  double vol = 0.2;
  double mean_excess = 0.02;
  /// Same-sign states draw c_i = mean_excess * (1 + dispersion * u_i).
  double dispersion = 0.1;
};

/// Lower Cholesky factor of vol^2 [(1 - rho) I + rho 1 1^T]. Throws
/// ConfigError unless -1/(n-1) < rho < 1.
Matrix equicorrelated_sigma(int n, double vol, double rho);

ExperimentReport leverage_correlation_experiment(const LeverageConfig& config, std::uint64_t seed);

struct StructureLimitsConfig {
  int n_min = 2;
  int n_max = 6;
  double sigma = 0.1;
  double a = 0.1;
  double b = 0.5;
  double s0 = 1.0;
  /// e^{-b t} < 1e-3 at b = 0.5.
  double horizon = 14.0;
  EnsembleConfig ensemble;
};

/// Bidiagonal market at r = 0: closed form vs stationary oracle vs Monte
/// Carlo mean of the total Kelly fraction at the horizon.
ExperimentReport structure_limits_experiment(const StructureLimitsConfig& config, std::uint64_t seed);

struct TriangularCurveConfig {
  int n = 3;
  double a = 0.5;
  double b = 0.2;
  double sigma = 0.1;
  double r = 0.03;
  double s0 = 10.0;
  std::vector<double> times{0.0, 1.0, 2.0, 5.0, 10.0, 20.0};
  EnsembleConfig ensemble;
};

/// Monte Carlo mean of the total Kelly fraction in the triangular market
/// against the closed-form expected-fraction curve and its limits.
ExperimentReport triangular_curve_experiment(const TriangularCurveConfig& config, std::uint64_t seed);

struct MartingaleConfig {
  double horizon = 2.0;
  int n_steps = 200;
  int n_paths = 10000;
  int n_checkpoints = 5;
  Execution execution = Execution::parallel;
};

/// Risk-neutral battery: E[Z_t] = 1 and E[S~_i(t)] = S~_i(0) within 3 SE,
/// plus the discounted optimal wealth vs density-form comparison.
ExperimentReport martingale_experiment(const MarketParams& params, const MartingaleConfig& config,
                                       std::uint64_t seed);

struct SchemeConvergenceConfig {
  double horizon = 1.0;
  int base_steps = 25;
  int doublings = 3;
  int n_paths = 10000;
  double initial_wealth = 1.0;
  Execution execution = Execution::parallel;
};

/// Budget-identity vs log-Euler Kelly wealth: self-financing residual on
/// every step, and the O(dt) decay of the mean terminal log-wealth gap.
ExperimentReport scheme_convergence_experiment(const MarketParams& params,
                                               const SchemeConvergenceConfig& config,
                                               std::uint64_t seed);

}  // namespace kelly_ou
