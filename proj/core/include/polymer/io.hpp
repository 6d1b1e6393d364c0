#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polymer/env_field.hpp"
#include "polymer/harness.hpp"
#include "polymer/partition.hpp"

namespace polymer::io {

struct ConfigValue {
  std::string text;
  int line = 0;
  int column = 0;  ///< column of the value's first character
};

/// Keys are "key" at top level and "section.key" inside [section].
using ConfigMap = std::map<std::string, ConfigValue>;

/// key = value lines, [section] headers, '#' or ';' comments.
ConfigMap parse_config_text(const std::string& text);
/// A JSON object; nested objects become sections, arrays comma lists.
ConfigMap parse_config_json(const std::string& text);
/// Dispatches on the first non-blank character ('{' means JSON).
ConfigMap load_config_file(const std::string& path);

/// Applies top-level keys, then those of [experiment]. Unknown keys and
/// malformed values raise ConfigError at their position.
void apply_config(const ConfigMap& map, ExperimentConfig& cfg);

std::string config_to_json(const ExperimentConfig& cfg);

/// Results table. Runtime is left out when include_runtime is false.
std::string results_csv(const std::vector<TestReport>& reports, bool include_runtime = true);
/// Stable 64-bit digest of the results without the runtime column.
std::string results_digest(const std::vector<TestReport>& reports);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

std::string manifest_json(const ExperimentConfig& cfg, const std::vector<TestReport>& reports);

/// Binary environment: "PLYENV1\0", then H, delta (f64), M, n, x_lo, x_hi (i64),
/// seed (u64), then n * width doubles, all little-endian.
void save_environment(const std::string& path, const EnvironmentField& env);
EnvironmentField load_environment(const std::string& path);

/// k, gamma, asymptote, ratio.
std::string gamma_csv(const EnvParams& p, const std::vector<int>& lags);
/// i, x, value, log_scale over the cone.
std::string partition_csv(const PartitionSurface& s);
std::string partition_summary_json(const PartitionSurface& s);

}  // namespace polymer::io
