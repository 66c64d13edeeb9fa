#include "kelly_ou/wealth_sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "kelly_ou/errors.hpp"
#include "wealth_kernels.hpp"

namespace kelly_ou {
namespace {

// Runs body(p) for every path. Paths own disjoint output slots, so the
// parallel loop needs no synchronization beyond exception capture.
template <class Body>
void for_each_path(int n_paths, Execution execution, Body&& body) {
  if (execution == Execution::serial) {
    for (int p = 0; p < n_paths; ++p) body(p);
    return;
  }
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < n_paths; ++p) {
    try {
      body(p);
    } catch (...) {
#pragma omp critical(kelly_ou_path_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

PathEnsemble simulate_physical(const MarketParams& params, const StrategySpec& strategy,
                               const SimulationOptions& options, WealthScheme scheme) {
  detail::validate_options(options);
  detail::PathContext ctx(params, strategy, options, scheme);
  const auto steps = detail::normalized_checkpoints(options, false);
  for (std::size_t i = 0; i < steps.size(); ++i) ctx.slot[steps[i]] = static_cast<int>(i);

  PathEnsemble ensemble = detail::allocate_ensemble(ctx, steps);
  for_each_path(options.n_paths, options.execution,
                [&](int p) { detail::run_physical_path(ctx, p, ensemble); });
  detail::summarize(ensemble);
  return ensemble;
}

}  // namespace

std::string to_string(WealthScheme scheme) {
  switch (scheme) {
    case WealthScheme::budget_identity:
      return "budget_identity";
    case WealthScheme::log_euler:
      return "log_euler";
    case WealthScheme::risk_neutral:
      return "risk_neutral";
  }
  return "unknown";
}

const Checkpoint& PathEnsemble::checkpoint(int step) const {
  for (const auto& cp : checkpoints) {
    if (cp.step == step) return cp;
  }
  throw std::out_of_range("no checkpoint at step " + std::to_string(step));
}

PathEnsemble simulate(const MarketParams& params, const StrategySpec& strategy,
                      const SimulationOptions& options) {
  return simulate_physical(params, strategy, options, WealthScheme::budget_identity);
}

PathEnsemble simulate_log_euler(const MarketParams& params, const StrategySpec& strategy,
                                const SimulationOptions& options) {
  return simulate_physical(params, strategy, options, WealthScheme::log_euler);
}

double self_financing_residual(const PathEnsemble& ensemble, const MarketParams& params) {
  const double r = params.r();
  double worst = ensemble.max_budget_residual.size() > 0 ? ensemble.max_budget_residual.maxCoeff() : 0.0;
  for (const auto& path : ensemble.recorded) {
    for (int k = 0; k < ensemble.n_steps; ++k) {
      const double v = path.wealth(k);
      if (!(v > 0.0)) break;  // absorbed
      const double b0 = std::exp(r * ensemble.times[k]);
      const double b1 = std::exp(r * ensemble.times[k + 1]);
      const Vector s0 = path.x.row(k).transpose().array().exp().matrix();
      const Vector s1 = path.x.row(k + 1).transpose().array().exp().matrix();
      const Vector f = path.f.row(k).transpose();
      const Holdings h = holdings_from_fractions(f, v, b0, s0);
      const double v1 = path.wealth(k + 1);
      if (!(v1 > 0.0)) break;  // liquidation step, not a trading step
      const double residual = (v1 - v) - h.phi0 * (b1 - b0) - h.phi.dot(s1 - s0);
      worst = std::max(worst, std::abs(residual) / v);
    }
  }
  return worst;
}

RiskNeutralRun simulate_risk_neutral(const MarketParams& params, const SimulationOptions& options) {
  detail::validate_options(options);
  if (!params.full_rank()) throw SingularVolatility(params.sigma_rank(), static_cast<int>(params.n()));
  const StrategySpec kelly = StrategySpec::kelly();
  detail::PathContext ctx(params, kelly, options, WealthScheme::risk_neutral);
  const auto steps = detail::normalized_checkpoints(options, true);
  for (std::size_t i = 0; i < steps.size(); ++i) ctx.slot[steps[i]] = static_cast<int>(i);

  RiskNeutralRun run;
  run.ensemble = detail::allocate_ensemble(ctx, steps);
  run.density.steps = steps;
  run.density.log_z.resize(options.n_paths, static_cast<Index>(steps.size()));
  for_each_path(options.n_paths, options.execution, [&](int p) {
    detail::run_risk_neutral_path(ctx, p, run.ensemble, run.density.log_z);
  });
  detail::summarize(run.ensemble);
  return run;
}

DiscountedWealthReport optimal_discounted_wealth_check(const MarketParams& params,
                                                       const SimulationOptions& options) {
  detail::validate_options(options);
  if (!params.full_rank()) throw SingularVolatility(params.sigma_rank(), static_cast<int>(params.n()));
  const StrategySpec kelly = StrategySpec::kelly();
  detail::PathContext ctx(params, kelly, options, WealthScheme::budget_identity);

  std::vector<detail::DiscountedGap> gaps(options.n_paths);
  for_each_path(options.n_paths, options.execution,
                [&](int p) { gaps[p] = detail::run_discounted_wealth_path(ctx, p); });

  DiscountedWealthReport report;
  report.n_steps = options.n_steps;
  double terminal_sum = 0.0;
  for (const auto& g : gaps) {
    report.max_gap_log_euler = std::max(report.max_gap_log_euler, g.max_log_euler);
    report.max_gap_budget = std::max(report.max_gap_budget, g.max_budget);
    terminal_sum += g.terminal_budget;
  }
  report.mean_terminal_gap_budget = terminal_sum / options.n_paths;
  return report;
}

}  // namespace kelly_ou
