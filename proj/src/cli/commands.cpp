#include "kelly_ou/cli.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>

#include "kelly_ou/config.hpp"
#include "kelly_ou/errors.hpp"
#include "kelly_ou/experiment_harness.hpp"
#include "kelly_ou/io.hpp"
#include "kelly_ou/kelly_engine.hpp"

namespace kelly_ou {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context {
  const CliOptions& options;
  const RunConfig& config;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;

  std::uint64_t require_seed() const {
    if (options.seed) return *options.seed;
    if (config.seed) return *config.seed;
    throw ConfigError("a seed is required: set \"seed\" in the config or pass --seed");
  }

  std::optional<std::uint64_t> seed() const { return options.seed ? options.seed : config.seed; }

  json metadata() const {
    json j{{"command", options.command}, {"config_hash", config.hash}};
    if (auto s = seed()) {
      j["seed"] = *s;
    } else {
      j["seed"] = nullptr;
    }
    return j;
  }

  std::string csv_preamble() const {
    const auto s = seed();
    return "# kelly_ou " + options.command + " config_hash=" + config.hash +
           " seed=" + (s ? std::to_string(*s) : std::string("none")) + "\n";
  }

  void write(const std::string& name, const std::string& content) const {
    write_file_atomic(out_dir / name, content);
  }
};

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

fs::path resolve_out_dir(const CliOptions& options, const RunConfig& config) {
  if (options.out_dir) return *options.out_dir;
  if (config.output_dir) return *config.output_dir;
  if (const char* env = std::getenv("KELLY_OU_OUT"); env && *env) return env;
  return ".";
}

int cmd_optimal_fraction(const Context& ctx) {
  const MarketParams& params = ctx.config.require_market();
  const StateBlock& sb = ctx.config.state;
  if (!params.full_rank() && !sb.allow_pseudo) {
    throw SingularVolatility(params.sigma_rank(), static_cast<int>(params.n()));
  }
  const Vector prices = sb.prices ? *sb.prices : params.s0();
  const MarketState state = MarketState::at(params, sb.t, prices.array().log().matrix());
  const FractionVector f = kelly_fraction(params, state);
  const double growth = growth_rate(params, state, f.f);
  std::optional<Vector> theta;
  if (params.full_rank()) theta = market_price_of_risk(params, state).theta;

  ctx.out << "asset,f,theta\n";
  for (Index i = 0; i < params.n(); ++i) {
    ctx.out << (i + 1) << ',' << format_double(f.f(i)) << ',' << (theta ? format_double((*theta)(i)) : "nan")
            << '\n';
  }
  ctx.out << "sum_f," << format_double(f.total()) << '\n';
  ctx.out << "sum_abs_f," << format_double(f.gross()) << '\n';
  ctx.out << "growth_rate," << format_double(growth) << '\n';
  if (f.pseudo) ctx.out << "note,pseudo-inverse used (sigma is singular)\n";

  json j = ctx.metadata();
  j["t"] = sb.t;
  j["prices"] = to_std(prices);
  j["f"] = to_std(f.f);
  j["theta"] = theta ? json(to_std(*theta)) : json(nullptr);
  j["sum_f"] = f.total();
  j["sum_abs_f"] = f.gross();
  j["growth_rate"] = growth;
  j["pseudo"] = f.pseudo;
  ctx.write("optimal_fraction.json", j.dump(2) + "\n");
  return kExitOk;
}

int cmd_simulate(const Context& ctx) {
  const MarketParams& params = ctx.config.require_market();
  const SimulateBlock& b = ctx.config.simulate;
  SimulationOptions opt;
  opt.horizon = b.horizon;
  opt.n_steps = b.steps;
  opt.n_paths = b.paths;
  opt.seed = ctx.require_seed();
  opt.initial_wealth = b.initial_wealth;
  opt.record_paths = b.record_paths;
  const PathEnsemble e = b.scheme == WealthScheme::log_euler ? simulate_log_euler(params, b.strategy, opt)
                                                              : simulate(params, b.strategy, opt);
  for (std::size_t k = 0; k < e.recorded.size(); ++k) {
    ctx.write("path_" + std::to_string(k) + ".csv", ctx.csv_preamble() + recorded_path_csv(e, k));
  }
  json j = ctx.metadata();
  j["scheme"] = to_string(e.scheme);
  j["strategy"] = e.strategy;
  j["horizon"] = e.horizon;
  j["n_steps"] = e.n_steps;
  j["n_paths"] = e.n_paths;
  j["v0"] = e.initial_wealth;
  j["summary"] = {{"mean_log_wealth", e.summary.mean_log_wealth},
                  {"var_log_wealth", e.summary.var_log_wealth},
                  {"se_log_wealth", e.summary.se_log_wealth},
                  {"n_solvent", e.summary.n_solvent},
                  {"n_bankrupt", e.summary.n_bankrupt},
                  {"mean_model_growth", e.summary.mean_model_growth},
                  {"se_model_growth", e.summary.se_model_growth}};
  j["self_financing_residual"] = self_financing_residual(e, params);
  ctx.write("summary.json", j.dump(2) + "\n");
  ctx.out << "paths=" << e.n_paths << " solvent=" << e.summary.n_solvent
          << " mean_log_wealth=" << format_double(e.summary.mean_log_wealth)
          << " se=" << format_double(e.summary.se_log_wealth) << '\n';
  return kExitOk;
}

int emit_report(const Context& ctx, const ExperimentReport& rep) {
  json j = ctx.metadata();
  j["report"] = rep.to_json();
  ctx.write(rep.name + "_report.json", j.dump(2) + "\n");
  ctx.write(rep.name + "_paths.csv", ctx.csv_preamble() + to_csv(rep.table_header, rep.table_rows));
  for (const auto& r : rep.rules) {
    ctx.out << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (!r.detail.empty()) ctx.out << "  (" << r.detail << ")";
    ctx.out << '\n';
  }
  ctx.err << rep.name << " runtime_seconds=" << rep.runtime_seconds << '\n';
  if (rep.passed()) return kExitOk;
  for (const auto& name : rep.failed_rules()) ctx.err << "failed rule: " << name << '\n';
  return kExitAcceptance;
}

const std::map<std::string, std::function<int(const Context&)>>& registry() {
  static const std::map<std::string, std::function<int(const Context&)>> table{
      {"optimal-fraction", cmd_optimal_fraction},
      {"simulate", cmd_simulate},
      {"structure-limits",
       [](const Context& c) {
         return emit_report(c, structure_limits_experiment(c.config.structure_limits, c.require_seed()));
       }},
      {"dominance",
       [](const Context& c) {
         return emit_report(c, dominance_experiment(c.config.require_market(), c.config.dominance,
                                                    c.require_seed()));
       }},
      {"sensitivity",
       [](const Context& c) {
         return emit_report(c, sensitivity_experiment(c.config.require_market(), c.config.sensitivity_epsilon));
       }},
      {"martingale-check",
       [](const Context& c) {
         return emit_report(c, martingale_experiment(c.config.require_market(), c.config.martingale,
                                                     c.require_seed()));
       }},
      {"fig1",
       [](const Context& c) {
         return emit_report(c, fig1_experiment(c.require_seed(), c.config.fig1.ensemble, c.config.fig1.horizon));
       }},
      {"leverage-correlation",
       [](const Context& c) {
         return emit_report(c, leverage_correlation_experiment(c.config.leverage, c.require_seed()));
       }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

int run_command(const CliOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const auto it = registry().find(options.command);
    if (it == registry().end()) throw ConfigError("unknown command " + options.command);
    if (options.threads) {
      if (*options.threads < 1) throw ConfigError("--threads must be >= 1");
      omp_set_num_threads(*options.threads);
    }
    const RunConfig config = options.config_path ? load_config(*options.config_path) : parse_config(json::object());
    const fs::path dir = resolve_out_dir(options, config);
    fs::create_directories(dir);
    const Context ctx{options, config, dir, out, err};
    return it->second(ctx);
  } catch (const SingularVolatility& e) {
    err << "error: " << e.what() << " (set optimal_fraction.allow_pseudo to use the pseudo-inverse)\n";
    return kExitNumerical;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NoStationaryDistribution& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace kelly_ou
