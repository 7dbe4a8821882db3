// Copyright 2026 The udp-adapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "udp/error.hpp"
#include "udp/serialize.hpp"

namespace udp {

/// Canonical JSON of every knob of a run. Keys are sorted by nlohmann's
/// default object type, so dump() is stable across platforms.
struct RunConfig {
  nlohmann::json values = nlohmann::json::object();

  std::string canonical() const { return values.dump(); }

  std::string run_id() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
  }
};

struct MetricRecord {
  std::string run_id;
  std::string method;
  std::string speaker;
  std::string budget;
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  std::string metric_name;
  double value = 0.0;
  nlohmann::json config;

  nlohmann::json to_json() const {
    return {{"run_id", run_id}, {"method", method},           {"speaker", speaker},
            {"budget", budget}, {"fold", fold},               {"seed", seed},
            {"metric_name", metric_name}, {"value", value},   {"config", config}};
  }

  static MetricRecord from_json(const nlohmann::json& j) {
    return {j.at("run_id"), j.at("method"), j.at("speaker"),     j.at("budget"), j.at("fold"),
            j.at("seed"),   j.at("metric_name"), j.at("value"), j.value("config", nlohmann::json::object())};
  }
};

inline void write_jsonl(std::ostream& os, const std::vector<MetricRecord>& records) {
  for (const auto& r : records) os << r.to_json().dump() << '\n';
}

inline void append_jsonl(const std::filesystem::path& path, const std::vector<MetricRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::app);
  if (!os) throw FormatError("cannot append metrics to " + path.string());
  write_jsonl(os, records);
}

inline std::vector<MetricRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot read metrics from " + path.string());
  std::vector<MetricRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(MetricRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad metrics line: ") + e.what());
    }
  }
  return out;
}

/// Mean of matching records; NaN when nothing matches.
inline double mean_metric(const std::vector<MetricRecord>& records, const std::string& method,
                          const std::string& budget, const std::string& metric) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.method == method && r.budget == budget && r.metric_name == metric) {
      s += r.value;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace udp
