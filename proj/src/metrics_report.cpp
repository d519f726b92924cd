#include "gtn/metrics_report.hpp"

#include <cmath>

#include "gtn/error.hpp"

namespace gtn {

void MetricsReport::set(const std::string& name, double value, std::size_t n, std::uint64_t seed) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kInvalidArgument, "metric '" + name + "' is not finite");
  }
  entries_[name] = MetricEntry{value, n, seed};
}

const MetricEntry& MetricsReport::at(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw Error(ErrorCode::kInvalidArgument, "no metric named '" + name + "'");
  return it->second;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, e] : entries_) {
    j[name] = {{"value", e.value}, {"n", e.n}, {"seed", e.seed}};
  }
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport report;
  for (const auto& [name, e] : j.items()) {
    report.set(name, e.at("value").get<double>(), e.at("n").get<std::size_t>(), e.at("seed").get<std::uint64_t>());
  }
  return report;
}

}  // namespace gtn
