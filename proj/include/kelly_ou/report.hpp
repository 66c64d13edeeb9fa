#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace kelly_ou {

/// A named value with its Monte Carlo standard error, or exact when `se`
/// is empty.
struct Metric {
  std::string name;
  double value = 0.0;
  std::optional<double> se;
};

/// Pass/fail outcome of one acceptance rule. `threshold` states the rule in
/// words so a report is readable on its own.
struct Rule {
  std::string name;
  std::string threshold;
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  std::string name;
  nlohmann::json config = nlohmann::json::object();
  std::vector<Metric> metrics;
  std::vector<Rule> rules;
  double runtime_seconds = 0.0;

  std::vector<std::string> table_header;
  std::vector<std::vector<double>> table_rows;

  void exact(std::string metric, double value);
  void estimate(std::string metric, double value, double se);
  void rule(std::string name, std::string threshold, bool passed, std::string detail = {});

  bool passed() const;
  const Metric& metric(const std::string& name) const;
  const Rule& find_rule(const std::string& name) const;
  std::vector<std::string> failed_rules() const;

  /// Everything except the runtime, which would break byte-identical reruns.
  nlohmann::json to_json() const;
};

}  // namespace kelly_ou
