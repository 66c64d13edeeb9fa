#pragma once

#include <vector>

#include "kelly_ou/kelly_engine.hpp"
#include "kelly_ou/market_model.hpp"
#include "kelly_ou/wealth_sim.hpp"

namespace kelly_ou::detail {

/// Everything a path kernel reads. Built once per run, shared read-only by
/// all workers.
struct PathContext {
  PathContext(const MarketParams& params, const StrategySpec& strategy,
              const SimulationOptions& options, WealthScheme scheme);

  const MarketParams& params;
  const StrategySpec& strategy;
  const SimulationOptions& options;
  WealthScheme scheme;
  double dt;
  KellySolver solver;
  OuPropagator propagator;
  std::vector<double> times;
  std::vector<double> bank;
  /// slot[k] = index into ensemble.checkpoints for step k, or -1.
  std::vector<int> slot;
};

void validate_options(const SimulationOptions& options);

/// Sorted, de-duplicated checkpoint steps; throws ConfigError when out of range.
std::vector<int> normalized_checkpoints(const SimulationOptions& options, bool with_ends);

PathEnsemble allocate_ensemble(const PathContext& ctx, const std::vector<int>& checkpoints);

/// Physical-measure path p for the budget-identity or log-Euler scheme.
void run_physical_path(const PathContext& ctx, int p, PathEnsemble& out);

/// Martingale-measure path p; also writes log Z at every checkpoint slot.
void run_risk_neutral_path(const PathContext& ctx, int p, PathEnsemble& out, Matrix& log_z);

struct DiscountedGap {
  double max_log_euler = 0.0;
  double max_budget = 0.0;
  double terminal_budget = 0.0;
};

DiscountedGap run_discounted_wealth_path(const PathContext& ctx, int p);

/// Deterministic (path-ordered) reduction of the per-path results.
void summarize(PathEnsemble& ensemble);

}  // namespace kelly_ou::detail
