#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kelly_ou/market_model.hpp"
#include "kelly_ou/strategy.hpp"
#include "kelly_ou/types.hpp"

namespace kelly_ou {

enum class WealthScheme {
  /// Holdings frozen over each step, V_{k+1} = phi0 B_{k+1} + phi . S_{k+1}.
  /// Exactly self-financing; a path can go bankrupt at coarse steps.
  budget_identity,
  /// log V advanced by (r + f^T c - 1/2 f^T R f) dt + f^T (realized shock).
  log_euler,
  /// Discounted prices driftless; wealth is the log-optimal B_t Z_t.
  risk_neutral,
};

enum class Execution { serial, parallel };

std::string to_string(WealthScheme scheme);

struct SimulationOptions {
  double horizon = 1.0;
  int n_steps = 100;
  int n_paths = 1000;
  std::uint64_t seed = 0;
  double initial_wealth = 1.0;
  /// Full trajectories are kept for the first `record_paths` paths.
  int record_paths = 0;
  /// Step indices in [0, n_steps] at which every path is snapshotted.
  std::vector<int> checkpoint_steps;
  Execution execution = Execution::parallel;
};

/// One stored trajectory; row k corresponds to times[k].
struct RecordedPath {
  Matrix x;
  Matrix f;
  Vector wealth;
  Vector log_wealth;
};

/// Snapshot of all paths at one step; row p is path p.
struct Checkpoint {
  int step = 0;
  double time = 0.0;
  Matrix x;
  Matrix f;
  Vector log_wealth;
};

struct EnsembleSummary {
  double mean_log_wealth = 0.0;
  double var_log_wealth = 0.0;
  double se_log_wealth = 0.0;
  int n_solvent = 0;
  int n_bankrupt = 0;
  double mean_model_growth = 0.0;
  double se_model_growth = 0.0;
};

struct PathEnsemble {
  std::uint64_t seed = 0;
  int n_paths = 0;
  int n_steps = 0;
  double horizon = 0.0;
  double initial_wealth = 1.0;
  WealthScheme scheme = WealthScheme::budget_identity;
  std::string strategy;
  std::vector<double> times;

  std::vector<RecordedPath> recorded;
  std::vector<Checkpoint> checkpoints;

  /// -inf on bankrupt paths.
  Vector terminal_log_wealth;
  std::vector<std::uint8_t> bankrupt;
  /// Per path: sum over steps of (f^T c - 1/2 f^T R f) dt, the log-growth in
  /// excess of r predicted by the continuous-time model along that path.
  Vector model_log_growth;
  /// Per path: max over steps of |dV - phi0 dB - phi . dS| / V, measured in
  /// the kernel against the holdings set at the start of each step.
  Vector max_budget_residual;
  /// Per path: sum over solvent steps of
  ///   1/2 sum_i f_i (s_i^2 - C_ii) - 1/2 ((f . s)^2 - f^T C f),
  /// with s the step's log-price shock and C its exact covariance. It has
  /// zero mean and carries the leading random part of the difference between
  /// the budget-identity and log-Euler log increments, so it serves as a
  /// control variate when comparing the two schemes.
  Vector quadratic_control;

  EnsembleSummary summary;

  const Checkpoint& checkpoint(int step) const;
};

/// log Z per path at each stored step (always includes 0 and n_steps).
struct DensityProcess {
  std::vector<int> steps;
  Matrix log_z;  // paths x steps
};

struct RiskNeutralRun {
  PathEnsemble ensemble;
  DensityProcess density;
};

struct DiscountedWealthReport {
  int n_steps = 0;
  /// max over paths/steps of |B^{-1} V* / V0 - exp-form| / exp-form.
  double max_gap_log_euler = 0.0;
  double max_gap_budget = 0.0;
  /// mean over paths of the same relative gap at the horizon.
  double mean_terminal_gap_budget = 0.0;
};

/// Budget-identity wealth under the physical measure.
PathEnsemble simulate(const MarketParams& params, const StrategySpec& strategy,
                      const SimulationOptions& options);

/// Same asset noise as simulate(), wealth advanced in log space.
PathEnsemble simulate_log_euler(const MarketParams& params, const StrategySpec& strategy,
                                const SimulationOptions& options);

/// max over paths and steps of |dV - phi0 dB - phi . dS| / V. Recorded
/// trajectories are re-checked from their stored (x, f, V) rows.
double self_financing_residual(const PathEnsemble& ensemble, const MarketParams& params);

/// Asset paths under the martingale measure with the density process Z.
/// Throws SingularVolatility for rank-deficient sigma.
RiskNeutralRun simulate_risk_neutral(const MarketParams& params, const SimulationOptions& options);

/// Compares the Kelly wealth (both schemes) against the exponential form
/// exp(int theta . dW + 1/2 int |theta|^2 dt) driven by the same noise.
DiscountedWealthReport optimal_discounted_wealth_check(const MarketParams& params,
                                                       const SimulationOptions& options);

namespace reference {

/// Straightforward serial implementation built only from the public
/// per-state operations. Slow; kept as the oracle for the optimized kernels.
PathEnsemble simulate_serial(const MarketParams& params, const StrategySpec& strategy,
                             const SimulationOptions& options, WealthScheme scheme);

}  // namespace reference

}  // namespace kelly_ou
