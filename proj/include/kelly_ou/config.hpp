#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "kelly_ou/experiment_harness.hpp"
#include "kelly_ou/market_model.hpp"
#include "kelly_ou/strategy.hpp"
#include "kelly_ou/structure_analytics.hpp"
#include "kelly_ou/wealth_sim.hpp"

namespace kelly_ou {

/// State at which optimal-fraction evaluates f*. Prices default to s0.
struct StateBlock {
  double t = 0.0;
  std::optional<Vector> prices;
  bool allow_pseudo = false;
};

struct SimulateBlock {
  StrategySpec strategy = StrategySpec::kelly();
  WealthScheme scheme = WealthScheme::budget_identity;
  double horizon = 1.0;
  int steps = 100;
  int paths = 1000;
  int record_paths = 1;
  double initial_wealth = 1.0;
};

struct Fig1Block {
  double horizon = 20.0;
  EnsembleConfig ensemble;
};

/// Parsed and validated run configuration. Every block has defaults; only
/// the blocks a command reads need to be present.
struct RunConfig {
  std::optional<MarketParams> market;
  std::optional<StructureKind> market_structure;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;

  StateBlock state;
  SimulateBlock simulate;
  StructureLimitsConfig structure_limits;
  DominanceConfig dominance;
  double sensitivity_epsilon = 1e-4;
  MartingaleConfig martingale;
  Fig1Block fig1;
  LeverageConfig leverage;

  /// Hash of the canonical (key-sorted, compact) JSON text.
  std::string hash;

  const MarketParams& require_market() const;
};

/// Schema-checks the document. Unknown keys and wrong types raise
/// ConfigError naming the offending path.
RunConfig parse_config(const nlohmann::json& doc);

RunConfig load_config(const std::filesystem::path& path);

}  // namespace kelly_ou
