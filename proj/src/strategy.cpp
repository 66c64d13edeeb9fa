#include "kelly_ou/strategy.hpp"

#include <cmath>
#include <sstream>

#include "kelly_ou/errors.hpp"

namespace kelly_ou {

StrategySpec StrategySpec::scaled_kelly(double lambda) {
  if (!std::isfinite(lambda)) throw ConfigError("scaled Kelly multiplier must be finite");
  return StrategySpec(ScaledKellyRule{lambda});
}

StrategySpec StrategySpec::fixed(Vector f) {
  if (!f.allFinite()) throw ConfigError("fixed fractions must be finite");
  return StrategySpec(FixedRule{std::move(f)});
}

std::string StrategySpec::name() const {
  struct Namer {
    std::string operator()(const KellyRule&) const { return "kelly"; }
    std::string operator()(const ScaledKellyRule& s) const {
      std::ostringstream os;
      os.imbue(std::locale::classic());
      os << "scaled_kelly(" << s.lambda << ")";
      return os.str();
    }
    std::string operator()(const FixedRule&) const { return "fixed"; }
    std::string operator()(const CashRule&) const { return "cash"; }
  };
  return std::visit(Namer{}, rule_);
}

void StrategySpec::fractions(const KellySolver& solver, const Vector& c, Vector& out) const {
  if (const auto* fixed = std::get_if<FixedRule>(&rule_)) {
    if (fixed->f.size() != c.size()) throw ConfigError("fixed fractions have the wrong dimension");
    out = fixed->f;
  } else if (std::holds_alternative<CashRule>(rule_)) {
    out.setZero(c.size());
  } else {
    solver.fraction_into(c, out);
    if (const auto* scaled = std::get_if<ScaledKellyRule>(&rule_)) out *= scaled->lambda;
  }
}

}  // namespace kelly_ou
