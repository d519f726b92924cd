#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"

namespace gtn {

struct MetricEntry {
  double value = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

/// Named scalar statistics; every stored value is finite.
class MetricsReport {
 public:
  void set(const std::string& name, double value, std::size_t n, std::uint64_t seed);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const MetricEntry& at(const std::string& name) const;
  const std::map<std::string, MetricEntry>& entries() const noexcept { return entries_; }

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);

 private:
  std::map<std::string, MetricEntry> entries_;
};

}  // namespace gtn
