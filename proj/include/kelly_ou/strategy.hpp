#pragma once

#include <string>
#include <variant>

#include "kelly_ou/kelly_engine.hpp"
#include "kelly_ou/types.hpp"

namespace kelly_ou {

struct KellyRule {};
struct ScaledKellyRule {
  double lambda;
};
struct FixedRule {
  Vector f;
};
struct CashRule {};

/// Maps a market state to portfolio fractions. Evaluation is deterministic
/// and never consumes randomness.
class StrategySpec {
 public:
  using Rule = std::variant<KellyRule, ScaledKellyRule, FixedRule, CashRule>;

  static StrategySpec kelly() { return StrategySpec(KellyRule{}); }
  static StrategySpec scaled_kelly(double lambda);
  static StrategySpec fixed(Vector f);
  static StrategySpec cash() { return StrategySpec(CashRule{}); }

  const Rule& rule() const { return rule_; }
  std::string name() const;

  /// Fractions at a state with excess return c. `solver` is only read by
  /// the Kelly-based rules.
  void fractions(const KellySolver& solver, const Vector& c, Vector& out) const;

 private:
  explicit StrategySpec(Rule rule) : rule_(std::move(rule)) {}
  Rule rule_;
};

}  // namespace kelly_ou
