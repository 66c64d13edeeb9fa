#include "kelly_ou/config.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <set>

#include "kelly_ou/errors.hpp"
#include "kelly_ou/io.hpp"

namespace kelly_ou {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) throw ConfigError("unknown key " + where + "." + item.key());
  }
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + " must be finite");
  return d;
}

int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
  const auto i = v.get<std::int64_t>();
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
    throw ConfigError(where + " is out of range");
  }
  return static_cast<int>(i);
}

int as_positive_int(const json& v, const std::string& where) {
  const int i = as_int(v, where);
  if (i < 1) throw ConfigError(where + " must be >= 1");
  return i;
}

double as_positive(const json& v, const std::string& where) {
  const double d = as_double(v, where);
  if (!(d > 0.0)) throw ConfigError(where + " must be > 0");
  return d;
}

std::vector<double> as_double_list(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + " must be a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_double(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

// Scalar broadcast to n entries, or an array that must have n entries.
Vector as_vector(const json& v, Index n, const std::string& where) {
  if (v.is_number()) return Vector::Constant(n, as_double(v, where));
  const auto list = as_double_list(v, where);
  if (static_cast<Index>(list.size()) != n) {
    throw ConfigError(where + " has " + std::to_string(list.size()) + " entries, market has " +
                      std::to_string(n) + " assets");
  }
  return Eigen::Map<const Vector>(list.data(), n);
}

Index array_size_or(const json& obj, const char* key, Index fallback) {
  if (obj.contains(key) && obj.at(key).is_array()) return static_cast<Index>(obj.at(key).size());
  return fallback;
}

template <class F>
void optional_field(const json& obj, const char* key, F&& apply) {
  if (obj.contains(key)) apply(obj.at(key));
}

void parse_ensemble(const json& obj, const std::string& where, EnsembleConfig& e) {
  optional_field(obj, "paths", [&](const json& v) { e.n_paths = as_positive_int(v, where + ".paths"); });
  optional_field(obj, "steps_per_unit",
                 [&](const json& v) { e.steps_per_unit = as_positive_int(v, where + ".steps_per_unit"); });
}

void parse_market(const json& m, RunConfig& cfg) {
  check_keys(m, "market", {"n", "a", "b", "sigma", "structure", "r", "s0"});
  for (const char* key : {"a", "b", "r", "s0"}) {
    if (!m.contains(key)) throw ConfigError(std::string("market.") + key + " is required");
  }
  if (m.contains("sigma") == m.contains("structure")) {
    throw ConfigError("market needs exactly one of sigma or structure");
  }

  Matrix sigma;
  if (m.contains("structure")) {
    const json& s = m.at("structure");
    check_keys(s, "market.structure", {"kind", "n", "sigma"});
    if (!s.contains("kind") || !s.at("kind").is_string()) {
      throw ConfigError("market.structure.kind must be \"bidiagonal\" or \"triangular\"");
    }
    const std::string kind = s.at("kind").get<std::string>();
    StructureKind sk;
    if (kind == "bidiagonal") {
      sk.structure = Structure::bidiagonal;
    } else if (kind == "triangular") {
      sk.structure = Structure::triangular;
    } else {
      throw ConfigError("market.structure.kind must be \"bidiagonal\" or \"triangular\"");
    }
    if (!s.contains("n") || !s.contains("sigma")) throw ConfigError("market.structure needs n and sigma");
    sk.n = as_int(s.at("n"), "market.structure.n");
    sk.sigma = as_double(s.at("sigma"), "market.structure.sigma");
    sigma = build_sigma(sk);
    cfg.market_structure = sk;
  } else {
    const json& s = m.at("sigma");
    if (s.is_number()) {
      Index n = 1;
      if (m.contains("n")) n = as_positive_int(m.at("n"), "market.n");
      n = array_size_or(m, "a", array_size_or(m, "b", array_size_or(m, "s0", n)));
      sigma = as_double(s, "market.sigma") * Matrix::Identity(n, n);
    } else {
      if (!s.is_array() || s.empty()) throw ConfigError("market.sigma must be a number or a square matrix");
      const Index n = static_cast<Index>(s.size());
      sigma.resize(n, n);
      for (Index i = 0; i < n; ++i) {
        const std::string row = "market.sigma[" + std::to_string(i) + "]";
        const auto values = as_double_list(s[static_cast<std::size_t>(i)], row);
        if (static_cast<Index>(values.size()) != n) throw ConfigError("market.sigma must be square");
        for (Index j = 0; j < n; ++j) sigma(i, j) = values[static_cast<std::size_t>(j)];
      }
    }
  }
  const Index n = sigma.rows();
  if (m.contains("n") && as_positive_int(m.at("n"), "market.n") != n) {
    throw ConfigError("market.n disagrees with sigma");
  }
  cfg.market.emplace(as_vector(m.at("a"), n, "market.a"), as_vector(m.at("b"), n, "market.b"), sigma,
                     as_double(m.at("r"), "market.r"), as_vector(m.at("s0"), n, "market.s0"));
}

StrategySpec parse_strategy(const json& s) {
  check_keys(s, "simulate.strategy", {"kind", "lambda", "f"});
  if (!s.contains("kind") || !s.at("kind").is_string()) {
    throw ConfigError("simulate.strategy.kind must be one of kelly, scaled_kelly, fixed, cash");
  }
  const std::string kind = s.at("kind").get<std::string>();
  if (kind != "scaled_kelly" && s.contains("lambda")) throw ConfigError("lambda only applies to scaled_kelly");
  if (kind != "fixed" && s.contains("f")) throw ConfigError("f only applies to fixed");
  if (kind == "kelly") return StrategySpec::kelly();
  if (kind == "cash") return StrategySpec::cash();
  if (kind == "scaled_kelly") {
    if (!s.contains("lambda")) throw ConfigError("scaled_kelly needs lambda");
    return StrategySpec::scaled_kelly(as_double(s.at("lambda"), "simulate.strategy.lambda"));
  }
  if (kind == "fixed") {
    if (!s.contains("f")) throw ConfigError("fixed strategy needs f");
    const auto f = as_double_list(s.at("f"), "simulate.strategy.f");
    return StrategySpec::fixed(Eigen::Map<const Vector>(f.data(), static_cast<Index>(f.size())));
  }
  throw ConfigError("simulate.strategy.kind must be one of kelly, scaled_kelly, fixed, cash");
}

void parse_state(const json& s, RunConfig& cfg) {
  check_keys(s, "optimal_fraction", {"t", "prices", "allow_pseudo"});
  optional_field(s, "t", [&](const json& v) {
    cfg.state.t = as_double(v, "optimal_fraction.t");
    if (cfg.state.t < 0.0) throw ConfigError("optimal_fraction.t must be >= 0");
  });
  optional_field(s, "prices", [&](const json& v) {
    const auto p = as_double_list(v, "optimal_fraction.prices");
    cfg.state.prices = Eigen::Map<const Vector>(p.data(), static_cast<Index>(p.size()));
  });
  optional_field(s, "allow_pseudo", [&](const json& v) {
    if (!v.is_boolean()) throw ConfigError("optimal_fraction.allow_pseudo must be true or false");
    cfg.state.allow_pseudo = v.get<bool>();
  });
}

void parse_simulate(const json& s, RunConfig& cfg) {
  check_keys(s, "simulate", {"strategy", "scheme", "horizon", "steps", "paths", "record_paths", "v0"});
  SimulateBlock& b = cfg.simulate;
  optional_field(s, "strategy", [&](const json& v) { b.strategy = parse_strategy(v); });
  optional_field(s, "scheme", [&](const json& v) {
    const std::string name = v.is_string() ? v.get<std::string>() : "";
    if (name == "budget_identity") {
      b.scheme = WealthScheme::budget_identity;
    } else if (name == "log_euler") {
      b.scheme = WealthScheme::log_euler;
    } else {
      throw ConfigError("simulate.scheme must be \"budget_identity\" or \"log_euler\"");
    }
  });
  optional_field(s, "horizon", [&](const json& v) { b.horizon = as_positive(v, "simulate.horizon"); });
  optional_field(s, "steps", [&](const json& v) { b.steps = as_positive_int(v, "simulate.steps"); });
  optional_field(s, "paths", [&](const json& v) { b.paths = as_positive_int(v, "simulate.paths"); });
  optional_field(s, "record_paths", [&](const json& v) {
    b.record_paths = as_int(v, "simulate.record_paths");
    if (b.record_paths < 0) throw ConfigError("simulate.record_paths must be >= 0");
  });
  optional_field(s, "v0", [&](const json& v) { b.initial_wealth = as_positive(v, "simulate.v0"); });
  if (b.record_paths > b.paths) throw ConfigError("simulate.record_paths exceeds simulate.paths");
}

void parse_structure_limits(const json& s, RunConfig& cfg) {
  check_keys(s, "structure_limits",
             {"n_min", "n_max", "sigma", "a", "b", "s0", "horizon", "paths", "steps_per_unit"});
  auto& c = cfg.structure_limits;
  optional_field(s, "n_min", [&](const json& v) { c.n_min = as_int(v, "structure_limits.n_min"); });
  optional_field(s, "n_max", [&](const json& v) { c.n_max = as_int(v, "structure_limits.n_max"); });
  optional_field(s, "sigma", [&](const json& v) { c.sigma = as_positive(v, "structure_limits.sigma"); });
  optional_field(s, "a", [&](const json& v) { c.a = as_double(v, "structure_limits.a"); });
  optional_field(s, "b", [&](const json& v) { c.b = as_positive(v, "structure_limits.b"); });
  optional_field(s, "s0", [&](const json& v) { c.s0 = as_positive(v, "structure_limits.s0"); });
  optional_field(s, "horizon", [&](const json& v) { c.horizon = as_positive(v, "structure_limits.horizon"); });
  parse_ensemble(s, "structure_limits", c.ensemble);
  if (c.n_min < 2 || c.n_max < c.n_min) throw ConfigError("structure_limits needs 2 <= n_min <= n_max");
}

void parse_dominance(const json& s, RunConfig& cfg) {
  check_keys(s, "dominance", {"lambdas", "horizons", "v0", "paths", "steps_per_unit"});
  auto& c = cfg.dominance;
  optional_field(s, "lambdas", [&](const json& v) { c.lambdas = as_double_list(v, "dominance.lambdas"); });
  optional_field(s, "horizons", [&](const json& v) { c.horizons = as_double_list(v, "dominance.horizons"); });
  optional_field(s, "v0", [&](const json& v) { c.initial_wealth = as_positive(v, "dominance.v0"); });
  parse_ensemble(s, "dominance", c.ensemble);
  if (std::find(c.lambdas.begin(), c.lambdas.end(), 1.0) == c.lambdas.end()) {
    throw ConfigError("dominance.lambdas must include 1.0");
  }
  for (double h : c.horizons) {
    if (!(h > 0.0)) throw ConfigError("dominance.horizons must be > 0");
  }
}

void parse_martingale(const json& s, RunConfig& cfg) {
  check_keys(s, "martingale_check", {"horizon", "steps", "paths", "checkpoints"});
  auto& c = cfg.martingale;
  optional_field(s, "horizon", [&](const json& v) { c.horizon = as_positive(v, "martingale_check.horizon"); });
  optional_field(s, "steps", [&](const json& v) { c.n_steps = as_positive_int(v, "martingale_check.steps"); });
  optional_field(s, "paths", [&](const json& v) { c.n_paths = as_positive_int(v, "martingale_check.paths"); });
  optional_field(s, "checkpoints",
                 [&](const json& v) { c.n_checkpoints = as_positive_int(v, "martingale_check.checkpoints"); });
  if (c.n_checkpoints > c.n_steps) throw ConfigError("martingale_check.checkpoints exceeds steps");
}

void parse_leverage(const json& s, RunConfig& cfg) {
  check_keys(s, "leverage_correlation", {"n", "rhos", "states", "vol", "mean_excess", "dispersion"});
  auto& c = cfg.leverage;
  optional_field(s, "n", [&](const json& v) { c.n = as_int(v, "leverage_correlation.n"); });
  optional_field(s, "rhos", [&](const json& v) { c.rhos = as_double_list(v, "leverage_correlation.rhos"); });
  optional_field(s, "states", [&](const json& v) { c.n_states = as_int(v, "leverage_correlation.states"); });
  optional_field(s, "vol", [&](const json& v) { c.vol = as_positive(v, "leverage_correlation.vol"); });
  optional_field(s, "mean_excess",
                 [&](const json& v) { c.mean_excess = as_positive(v, "leverage_correlation.mean_excess"); });
  optional_field(s, "dispersion", [&](const json& v) {
    c.dispersion = as_double(v, "leverage_correlation.dispersion");
    if (c.dispersion < 0.0 || c.dispersion >= 1.0) {
      throw ConfigError("leverage_correlation.dispersion must be in [0, 1) to keep excess returns positive");
    }
  });
  if (c.n < 2) throw ConfigError("leverage_correlation.n must be >= 2");
  if (c.n_states < 2) throw ConfigError("leverage_correlation.states must be >= 2");
  for (double rho : c.rhos) equicorrelated_sigma(c.n, c.vol, rho);
}

}  // namespace

const MarketParams& RunConfig::require_market() const {
  if (!market) throw ConfigError("this command needs a market block");
  return *market;
}

RunConfig parse_config(const json& doc) {
  check_keys(doc, "config",
             {"market", "seed", "output_dir", "optimal_fraction", "simulate", "structure_limits", "dominance",
              "sensitivity", "martingale_check", "fig1", "leverage_correlation"});
  RunConfig cfg;
  optional_field(doc, "seed", [&](const json& v) {
    const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (!ok) throw ConfigError("seed must be a non-negative integer");
    cfg.seed = v.get<std::uint64_t>();
  });
  optional_field(doc, "output_dir", [&](const json& v) {
    if (!v.is_string()) throw ConfigError("output_dir must be a string");
    cfg.output_dir = v.get<std::string>();
  });
  optional_field(doc, "market", [&](const json& v) { parse_market(v, cfg); });
  optional_field(doc, "optimal_fraction", [&](const json& v) { parse_state(v, cfg); });
  optional_field(doc, "simulate", [&](const json& v) { parse_simulate(v, cfg); });
  optional_field(doc, "structure_limits", [&](const json& v) { parse_structure_limits(v, cfg); });
  optional_field(doc, "dominance", [&](const json& v) { parse_dominance(v, cfg); });
  optional_field(doc, "sensitivity", [&](const json& v) {
    check_keys(v, "sensitivity", {"epsilon"});
    optional_field(v, "epsilon", [&](const json& e) { cfg.sensitivity_epsilon = as_double(e, "sensitivity.epsilon"); });
  });
  optional_field(doc, "martingale_check", [&](const json& v) { parse_martingale(v, cfg); });
  optional_field(doc, "fig1", [&](const json& v) {
    check_keys(v, "fig1", {"horizon", "paths", "steps_per_unit"});
    optional_field(v, "horizon", [&](const json& h) { cfg.fig1.horizon = as_positive(h, "fig1.horizon"); });
    parse_ensemble(v, "fig1", cfg.fig1.ensemble);
  });
  optional_field(doc, "leverage_correlation", [&](const json& v) { parse_leverage(v, cfg); });

  if (cfg.market && cfg.state.prices && cfg.state.prices->size() != cfg.market->n()) {
    throw ConfigError("optimal_fraction.prices length does not match the market");
  }
  if (cfg.market && cfg.state.prices && !(cfg.state.prices->array() > 0.0).all()) {
    throw ConfigError("optimal_fraction.prices must be > 0");
  }
  cfg.hash = fnv1a_hex(doc.dump());
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace kelly_ou
