#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "polymer/env_field.hpp"

namespace polymer {

struct ExperimentConfig {
  std::string experiment = "identities";
  EnvParams env;
  /// When false, delta is recomputed from (hurst, shape, lambda_target).
  bool delta_fixed = false;
  /// When false, lambda_target follows H(2H-1).
  bool lambda_fixed = false;
  std::vector<int> n_grid{256};
  double beta = 1.0;
  int replicas = 1000;
  std::uint64_t seed = 20240601;
  int threads = 0;  ///< 0: POLYMER_LIMITS_THREADS or hardware concurrency
  std::string out_dir = "results";
  std::string checkpoint;  ///< empty: no checkpointing
  int q = 2;
  double iota = -1.0;  ///< < 0: H - 0.1
  int k = 1;
  /// Declared pass thresholds, keyed by statistic name.
  std::map<std::string, double> thresholds;
  /// Experiment-specific numeric knobs.
  std::map<std::string, double> params;

  /// Env params with delta calibrated unless fixed.
  EnvParams env_params() const;
  int n() const { return n_grid.back(); }
  double threshold(const std::string& name) const;
  double param(const std::string& name, double fallback) const;
  void validate() const;
};

/// Defaults of the acceptance-scale run of one experiment.
ExperimentConfig default_config(const std::string& experiment);

const std::vector<std::string>& experiment_names();

struct TestReport {
  std::string experiment;
  std::string statistic;
  int n = 0;
  double beta = 0.0;
  double hurst = 0.0;
  double value = 0.0;
  double se = 0.0;
  double threshold = 0.0;
  bool pass = false;
  bool informational = false;  ///< diagnostic row, not part of the verdict
  std::uint64_t seed = 0;
  double runtime_ms = 0.0;
  std::string note;
};

int resolve_threads(int requested);

struct ReplicaOptions {
  int threads = 0;
  std::uint64_t tag = 0;   ///< separates replica streams of different experiments
  std::string checkpoint;  ///< append-only results file; existing rows are reused
};

struct ReplicaResults {
  int width = 0;
  std::vector<std::vector<double>> rows;  ///< by replica index
  std::vector<char> ok;
  std::vector<std::uint64_t> seeds;
  std::vector<int> failed;
  std::vector<std::string> errors;
  int resumed = 0;

  int effective() const noexcept { return static_cast<int>(rows.size() - failed.size()); }
  /// Column c of the successful replicas, in index order.
  std::vector<double> column(int c) const;
};

using ReplicaFn = std::function<std::vector<double>(int index, std::uint64_t seed)>;

std::uint64_t replica_seed(std::uint64_t master, std::uint64_t tag, int index);

/// Runs fn for indices 0..M-1 on a worker pool. Results depend only on
/// (master seed, tag, index); a throwing replica is recorded as failed.
ReplicaResults run_replicas(int M, std::uint64_t master_seed, int width, const ReplicaFn& fn,
                            const ReplicaOptions& opt = {});

}  // namespace polymer
