#include <cmath>
#include <limits>

#include "kelly_ou/errors.hpp"
#include "kelly_ou/kelly_engine.hpp"
#include "kelly_ou/rng.hpp"
#include "kelly_ou/wealth_sim.hpp"
#include "../wealth_kernels.hpp"

namespace kelly_ou::reference {
namespace {

Vector reference_fractions(const MarketParams& params, const MarketState& state,
                           const StrategySpec& strategy) {
  const auto& rule = strategy.rule();
  if (const auto* fixed = std::get_if<FixedRule>(&rule)) return fixed->f;
  if (std::holds_alternative<CashRule>(rule)) return Vector::Zero(params.n());
  Vector f = kelly_fraction(params, state).f;
  if (const auto* scaled = std::get_if<ScaledKellyRule>(&rule)) f *= scaled->lambda;
  return f;
}

}  // namespace

PathEnsemble simulate_serial(const MarketParams& params, const StrategySpec& strategy,
                             const SimulationOptions& options, WealthScheme scheme) {
  if (scheme == WealthScheme::risk_neutral) {
    throw ConfigError("reference::simulate_serial covers the physical-measure schemes only");
  }
  detail::validate_options(options);
  const double dt = options.horizon / options.n_steps;

  PathEnsemble e;
  e.seed = options.seed;
  e.n_paths = options.n_paths;
  e.n_steps = options.n_steps;
  e.horizon = options.horizon;
  e.initial_wealth = options.initial_wealth;
  e.scheme = scheme;
  e.strategy = strategy.name();
  for (int k = 0; k <= options.n_steps; ++k) e.times.push_back(k * dt);
  e.terminal_log_wealth.resize(options.n_paths);
  e.bankrupt.assign(options.n_paths, 0);
  e.model_log_growth.resize(options.n_paths);
  e.max_budget_residual.setZero(options.n_paths);
  e.quadratic_control.setZero(options.n_paths);

  for (int p = 0; p < options.n_paths; ++p) {
    PathStream rng(options.seed, static_cast<std::uint64_t>(p));
    MarketState state = MarketState::initial(params);
    double wealth = options.initial_wealth;
    double log_wealth = std::log(wealth);
    double model = 0.0;
    double control = 0.0;
    bool bankrupt = false;
    Vector z(params.n());

    for (int k = 0; k < options.n_steps; ++k) {
      const Vector f = reference_fractions(params, state, strategy);
      const GaussianStep law = transition_law(params, state, dt);
      rng.fill_normal(z);
      const Vector x_next = sample_step(law, z);
      const MarketState next = MarketState::at(params, (k + 1) * dt, x_next);

      if (!bankrupt) {
        const double g = growth_rate(params, state, f);
        model += (g - params.r()) * dt;
        const Vector shock = x_next - law.mean;
        for (Index i = 0; i < params.n(); ++i) {
          control += 0.5 * f(i) * (shock(i) * shock(i) - law.cov(i, i));
        }
        control -= 0.5 * (f.dot(shock) * f.dot(shock) - f.dot(law.cov * f));
        if (scheme == WealthScheme::budget_identity) {
          const Holdings h = holdings_from_fractions(f, wealth, state.bank(), state.prices());
          const double v = h.value(next.bank(), next.prices());
          if (v <= 0.0) {
            bankrupt = true;
            wealth = 0.0;
            log_wealth = -std::numeric_limits<double>::infinity();
          } else {
            wealth = v;
            log_wealth = std::log(v);
          }
        } else {
          log_wealth += g * dt + f.dot(x_next - law.mean);
          wealth = std::exp(log_wealth);
        }
      }
      state = next;
    }
    e.terminal_log_wealth(p) = log_wealth;
    e.bankrupt[p] = bankrupt ? 1 : 0;
    e.model_log_growth(p) = model;
    e.quadratic_control(p) = control;
  }
  detail::summarize(e);
  return e;
}

}  // namespace kelly_ou::reference
