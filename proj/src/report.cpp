#include "kelly_ou/report.hpp"

#include <algorithm>
#include <stdexcept>

namespace kelly_ou {

void ExperimentReport::exact(std::string metric, double value) {
  metrics.push_back(Metric{std::move(metric), value, std::nullopt});
}

void ExperimentReport::estimate(std::string metric, double value, double se) {
  metrics.push_back(Metric{std::move(metric), value, se});
}

void ExperimentReport::rule(std::string name, std::string threshold, bool passed, std::string detail) {
  rules.push_back(Rule{std::move(name), std::move(threshold), passed, std::move(detail)});
}

bool ExperimentReport::passed() const {
  return std::all_of(rules.begin(), rules.end(), [](const Rule& r) { return r.passed; });
}

const Metric& ExperimentReport::metric(const std::string& metric_name) const {
  for (const auto& m : metrics) {
    if (m.name == metric_name) return m;
  }
  throw std::out_of_range("report " + name + " has no metric " + metric_name);
}

const Rule& ExperimentReport::find_rule(const std::string& rule_name) const {
  for (const auto& r : rules) {
    if (r.name == rule_name) return r;
  }
  throw std::out_of_range("report " + name + " has no rule " + rule_name);
}

std::vector<std::string> ExperimentReport::failed_rules() const {
  std::vector<std::string> out;
  for (const auto& r : rules) {
    if (!r.passed) out.push_back(r.name);
  }
  return out;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["config"] = config;
  auto& ms = j["metrics"] = nlohmann::json::array();
  for (const auto& m : metrics) {
    nlohmann::json e{{"name", m.name}, {"value", m.value}};
    if (m.se) {
      e["se"] = *m.se;
    } else {
      e["exact"] = true;
    }
    ms.push_back(std::move(e));
  }
  auto& rs = j["rules"] = nlohmann::json::array();
  for (const auto& r : rules) {
    rs.push_back({{"name", r.name}, {"threshold", r.threshold}, {"passed", r.passed}, {"detail", r.detail}});
  }
  j["passed"] = passed();
  return j;
}

}  // namespace kelly_ou
