#include "wealth_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kelly_ou/errors.hpp"
#include "kelly_ou/rng.hpp"

namespace kelly_ou::detail {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double step_size(const SimulationOptions& options) {
  return options.horizon / static_cast<double>(options.n_steps);
}

}  // namespace

void validate_options(const SimulationOptions& options) {
  if (!(options.horizon > 0.0) || !std::isfinite(options.horizon)) {
    throw ConfigError("horizon must be finite and > 0");
  }
  if (options.n_steps < 1) throw ConfigError("n_steps must be >= 1");
  if (options.n_paths < 1) throw ConfigError("n_paths must be >= 1");
  if (!(options.initial_wealth > 0.0) || !std::isfinite(options.initial_wealth)) {
    throw ConfigError("initial wealth must be finite and > 0");
  }
  if (options.record_paths < 0) throw ConfigError("record_paths must be >= 0");
}

std::vector<int> normalized_checkpoints(const SimulationOptions& options, bool with_ends) {
  std::vector<int> steps = options.checkpoint_steps;
  if (with_ends) {
    steps.push_back(0);
    steps.push_back(options.n_steps);
  }
  for (int s : steps) {
    if (s < 0 || s > options.n_steps) {
      throw ConfigError("checkpoint step " + std::to_string(s) + " outside [0, n_steps]");
    }
  }
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

PathContext::PathContext(const MarketParams& params_, const StrategySpec& strategy_,
                         const SimulationOptions& options_, WealthScheme scheme_)
    : params(params_),
      strategy(strategy_),
      options(options_),
      scheme(scheme_),
      dt(step_size(options_)),
      solver(params_),
      propagator(params_, step_size(options_)) {
  const int n_steps = options.n_steps;
  times.resize(n_steps + 1);
  bank.resize(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) {
    times[k] = k == n_steps ? options.horizon
                            : options.horizon * static_cast<double>(k) / static_cast<double>(n_steps);
    bank[k] = std::exp(params.r() * times[k]);
  }
  slot.assign(n_steps + 1, -1);
}

PathEnsemble allocate_ensemble(const PathContext& ctx, const std::vector<int>& checkpoints) {
  const auto& opt = ctx.options;
  const Index n = ctx.params.n();
  PathEnsemble e;
  e.seed = opt.seed;
  e.n_paths = opt.n_paths;
  e.n_steps = opt.n_steps;
  e.horizon = opt.horizon;
  e.initial_wealth = opt.initial_wealth;
  e.scheme = ctx.scheme;
  e.strategy = ctx.scheme == WealthScheme::risk_neutral ? "kelly" : ctx.strategy.name();
  e.times = ctx.times;

  const int n_rec = std::min(opt.record_paths, opt.n_paths);
  e.recorded.resize(n_rec);
  for (auto& r : e.recorded) {
    r.x.resize(opt.n_steps + 1, n);
    r.f.resize(opt.n_steps + 1, n);
    r.wealth.resize(opt.n_steps + 1);
    r.log_wealth.resize(opt.n_steps + 1);
  }
  e.checkpoints.resize(checkpoints.size());
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    auto& cp = e.checkpoints[i];
    cp.step = checkpoints[i];
    cp.time = ctx.times[cp.step];
    cp.x.resize(opt.n_paths, n);
    cp.f.resize(opt.n_paths, n);
    cp.log_wealth.resize(opt.n_paths);
  }
  e.terminal_log_wealth.resize(opt.n_paths);
  e.bankrupt.assign(opt.n_paths, 0);
  e.model_log_growth.resize(opt.n_paths);
  e.max_budget_residual.setZero(opt.n_paths);
  e.quadratic_control.setZero(opt.n_paths);
  return e;
}

void run_physical_path(const PathContext& ctx, int p, PathEnsemble& out) {
  const MarketParams& params = ctx.params;
  const Index n = params.n();
  const Matrix& R = params.covariance_rate();
  const Matrix& C = ctx.propagator.cov();
  const double dt = ctx.dt;
  const int n_steps = ctx.options.n_steps;
  const bool budget = ctx.scheme == WealthScheme::budget_identity;

  PathStream rng(ctx.options.seed, static_cast<std::uint64_t>(p));
  Vector x = params.s0().array().log().matrix();
  Vector x_next(n), z(n), shock(n), c(n), f(n), Rf(n), phi(n);
  Vector prices = x.array().exp().matrix();
  Vector prices_next(n);

  double wealth = ctx.options.initial_wealth;
  double log_wealth = std::log(wealth);
  double model_growth = 0.0;
  double max_residual = 0.0;
  double control = 0.0;
  bool bankrupt = false;
  RecordedPath* rec = p < static_cast<int>(out.recorded.size()) ? &out.recorded[p] : nullptr;

  for (int k = 0;; ++k) {
    excess_return_into(params, x, c);
    ctx.strategy.fractions(ctx.solver, c, f);
    if (!f.allFinite()) throw NumericalError("non-finite fractions on path " + std::to_string(p));

    if (rec) {
      rec->x.row(k) = x.transpose();
      rec->f.row(k) = f.transpose();
      rec->wealth(k) = wealth;
      rec->log_wealth(k) = log_wealth;
    }
    if (const int s = ctx.slot[k]; s >= 0) {
      auto& cp = out.checkpoints[s];
      cp.x.row(p) = x.transpose();
      cp.f.row(p) = f.transpose();
      cp.log_wealth(p) = log_wealth;
    }
    if (k == n_steps) break;

    rng.fill_normal(z);
    ctx.propagator.step(x, z, x_next, shock);

    if (!bankrupt) {
      Rf.noalias() = R * f;
      const double excess_growth = f.dot(c) - 0.5 * f.dot(Rf);
      model_growth += excess_growth * dt;
      const double fs = f.dot(shock);
      control += 0.5 * (f.array() * (shock.array().square() - C.diagonal().array())).sum() -
                 0.5 * (fs * fs - f.dot(C * f));
      prices_next = x_next.array().exp().matrix();
      const double phi0 = (1.0 - f.sum()) * wealth / ctx.bank[k];
      phi = (f.array() * wealth / prices.array()).matrix();
      double next = 0.0;
      if (budget) {
        next = phi0 * ctx.bank[k + 1] + phi.dot(prices_next);
        if (std::isnan(next)) throw NumericalError("NaN wealth on path " + std::to_string(p));
      } else {
        log_wealth += (params.r() + excess_growth) * dt + f.dot(shock);
        if (std::isnan(log_wealth)) throw NumericalError("NaN wealth on path " + std::to_string(p));
        next = std::exp(log_wealth);
      }
      if (next > 0.0) {
        const double residual = (next - wealth) - phi0 * (ctx.bank[k + 1] - ctx.bank[k]) -
                                phi.dot(prices_next - prices);
        max_residual = std::max(max_residual, std::abs(residual) / wealth);
      }
      if (budget && next <= 0.0) {
        bankrupt = true;
        wealth = 0.0;
        log_wealth = kNegInf;
      } else {
        wealth = next;
        if (budget) log_wealth = std::log(next);
      }
    }
    x.swap(x_next);
    prices.swap(prices_next);
  }

  out.terminal_log_wealth(p) = log_wealth;
  out.bankrupt[p] = bankrupt ? 1 : 0;
  out.model_log_growth(p) = model_growth;
  out.max_budget_residual(p) = max_residual;
  out.quadratic_control(p) = control;
}

void run_risk_neutral_path(const PathContext& ctx, int p, PathEnsemble& out, Matrix& log_z) {
  const MarketParams& params = ctx.params;
  const Index n = params.n();
  const double dt = ctx.dt;
  const double sqrt_dt = std::sqrt(dt);
  const int n_steps = ctx.options.n_steps;
  const double log_v0 = std::log(ctx.options.initial_wealth);
  // Discounted prices are driftless: dx_i = (r - 1/2 |sigma_i|^2) dt + sigma_i . dW.
  const Vector drift = (params.r() - 0.5 * params.row_norms_sq().array()).matrix() * dt;

  PathStream rng(ctx.options.seed, static_cast<std::uint64_t>(p));
  Vector x = params.s0().array().log().matrix();
  Vector z(n), dw(n), c(n), f(n), theta(n), shock(n);
  double lz = 0.0;
  RecordedPath* rec = p < static_cast<int>(out.recorded.size()) ? &out.recorded[p] : nullptr;

  for (int k = 0;; ++k) {
    excess_return_into(params, x, c);
    ctx.solver.apply_sigma_inverse(c, theta);
    ctx.solver.fraction_into(c, f);
    const double log_wealth = log_v0 + params.r() * ctx.times[k] + lz;

    if (rec) {
      rec->x.row(k) = x.transpose();
      rec->f.row(k) = f.transpose();
      rec->wealth(k) = std::exp(log_wealth);
      rec->log_wealth(k) = log_wealth;
    }
    if (const int s = ctx.slot[k]; s >= 0) {
      auto& cp = out.checkpoints[s];
      cp.x.row(p) = x.transpose();
      cp.f.row(p) = f.transpose();
      cp.log_wealth(p) = log_wealth;
      log_z(p, s) = lz;
    }
    if (k == n_steps) {
      out.terminal_log_wealth(p) = log_wealth;
      out.model_log_growth(p) = 0.0;
      break;
    }

    rng.fill_normal(z);
    dw = sqrt_dt * z;
    shock.noalias() = params.sigma() * dw;
    x += drift + shock;
    lz += theta.dot(dw) - 0.5 * theta.squaredNorm() * dt;
    if (std::isnan(lz) || !x.allFinite()) {
      throw NumericalError("non-finite risk-neutral state on path " + std::to_string(p));
    }
  }
  out.bankrupt[p] = 0;
}

DiscountedGap run_discounted_wealth_path(const PathContext& ctx, int p) {
  const MarketParams& params = ctx.params;
  const Index n = params.n();
  const Matrix& R = params.covariance_rate();
  const double dt = ctx.dt;
  const int n_steps = ctx.options.n_steps;
  const double v0 = ctx.options.initial_wealth;

  PathStream rng(ctx.options.seed, static_cast<std::uint64_t>(p));
  Vector x = params.s0().array().log().matrix();
  Vector x_next(n), z(n), shock(n), c(n), f(n), Rf(n), theta(n), dw(n);
  Vector prices = x.array().exp().matrix();
  Vector prices_next(n);

  double budget_wealth = v0;
  double log_euler = std::log(v0);
  double log_exp_form = 0.0;
  DiscountedGap gap;

  for (int k = 0; k < n_steps; ++k) {
    excess_return_into(params, x, c);
    ctx.solver.fraction_into(c, f);
    ctx.solver.apply_sigma_inverse(c, theta);
    Rf.noalias() = R * f;
    const double excess_growth = f.dot(c) - 0.5 * f.dot(Rf);

    rng.fill_normal(z);
    ctx.propagator.step(x, z, x_next, shock);
    ctx.solver.apply_sigma_inverse(shock, dw);
    prices_next = x_next.array().exp().matrix();

    if (budget_wealth > 0.0) {
      const double phi0 = (1.0 - f.sum()) * budget_wealth / ctx.bank[k];
      double risky = 0.0;
      for (Index i = 0; i < n; ++i) risky += f(i) * budget_wealth / prices(i) * prices_next(i);
      budget_wealth = phi0 * ctx.bank[k + 1] + risky;
    }
    log_euler += (params.r() + excess_growth) * dt + f.dot(shock);
    log_exp_form += theta.dot(dw) + 0.5 * theta.squaredNorm() * dt;

    const double log_discount = std::log(v0) + params.r() * ctx.times[k + 1] + log_exp_form;
    const double gap_euler = std::abs(std::expm1(log_euler - log_discount));
    const double gap_budget = budget_wealth > 0.0
                                  ? std::abs(std::expm1(std::log(budget_wealth) - log_discount))
                                  : std::numeric_limits<double>::infinity();
    gap.max_log_euler = std::max(gap.max_log_euler, gap_euler);
    gap.max_budget = std::max(gap.max_budget, gap_budget);
    if (k + 1 == n_steps) gap.terminal_budget = gap_budget;

    x.swap(x_next);
    prices.swap(prices_next);
  }
  return gap;
}

void summarize(PathEnsemble& e) {
  EnsembleSummary s;
  double sum = 0.0;
  double sum_growth = 0.0;
  for (int p = 0; p < e.n_paths; ++p) {
    sum_growth += e.model_log_growth(p);
    if (e.bankrupt[p]) {
      ++s.n_bankrupt;
      continue;
    }
    ++s.n_solvent;
    sum += e.terminal_log_wealth(p);
  }
  if (s.n_solvent > 0) s.mean_log_wealth = sum / s.n_solvent;
  s.mean_model_growth = sum_growth / e.n_paths;

  double ss = 0.0;
  double ss_growth = 0.0;
  for (int p = 0; p < e.n_paths; ++p) {
    const double dg = e.model_log_growth(p) - s.mean_model_growth;
    ss_growth += dg * dg;
    if (e.bankrupt[p]) continue;
    const double d = e.terminal_log_wealth(p) - s.mean_log_wealth;
    ss += d * d;
  }
  if (s.n_solvent > 1) {
    s.var_log_wealth = ss / (s.n_solvent - 1);
    s.se_log_wealth = std::sqrt(s.var_log_wealth / s.n_solvent);
  }
  if (e.n_paths > 1) {
    s.se_model_growth = std::sqrt(ss_growth / (e.n_paths - 1) / e.n_paths);
  }
  e.summary = s;
}

}  // namespace kelly_ou::detail
