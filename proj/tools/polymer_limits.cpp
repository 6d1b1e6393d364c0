#include <cstdio>
#include <filesystem>
#include <iostream>
#include <new>
#include <optional>

#include <CLI11.hpp>

#include "polymer/errors.hpp"
#include "polymer/experiments.hpp"
#include "polymer/io.hpp"

namespace fs = std::filesystem;
using namespace polymer;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::vector<int> n;
  std::optional<double> beta;
  std::optional<double> hurst;
  std::optional<int> replicas;
  std::optional<int> cutoff;
  std::optional<std::string> checkpoint;
};

ExperimentConfig build_config(const std::string& name, const Overrides& o,
                              const std::optional<io::ConfigMap>& file) {
  ExperimentConfig c = default_config(name);
  if (file) io::apply_config(*file, c);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.out) c.out_dir = *o.out;
  if (!o.n.empty()) c.n_grid = o.n;
  if (o.beta) c.beta = *o.beta;
  if (o.hurst) c.env.hurst = *o.hurst;
  if (o.replicas) c.replicas = *o.replicas;
  if (o.cutoff) c.env.cutoff = *o.cutoff;
  if (o.checkpoint) c.checkpoint = *o.checkpoint;
  c.validate();
  return c;
}

void write_outputs(const ExperimentConfig& c, const ExperimentResult& r) {
  const fs::path dir = fs::path(c.out_dir) / c.experiment;
  fs::create_directories(dir);
  io::write_text((dir / "results.csv").string(), io::results_csv(r.reports));
  io::write_text((dir / "manifest.json").string(), io::manifest_json(c, r.reports));
  for (const auto& [name, content] : r.artifacts) io::write_text((dir / name).string(), content);
}

void print_reports(const std::vector<TestReport>& reports) {
  for (const auto& r : reports) {
    const char* verdict = r.informational ? "info" : (r.pass ? "PASS" : "FAIL");
    std::printf("%-4s %-22s %-36s n=%-6d value=%.6g threshold=%.6g%s%s\n", verdict, r.experiment.c_str(),
                r.statistic.c_str(), r.n, r.value, r.threshold, r.note.empty() ? "" : "  ", r.note.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-n checks of directed polymer limit theorems in a long-range correlated environment"};
  app.require_subcommand(1, 1);
  Overrides o;
  app.add_option("--config", o.config, "Key=value or JSON configuration file (a run manifest is accepted)");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--threads", o.threads, "Worker threads (fallback: POLYMER_LIMITS_THREADS)");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--n", o.n, "Walk length grid (comma separated)")->delimiter(',');
  app.add_option("--beta", o.beta, "Inverse temperature");
  app.add_option("--hurst", o.hurst, "Hurst parameter in (1/2, 1)");
  app.add_option("--replicas", o.replicas, "Monte Carlo replica count");
  app.add_option("--cutoff", o.cutoff, "Kernel cutoff M");
  app.add_option("--checkpoint", o.checkpoint, "Replica checkpoint file prefix for resumable runs");

  std::vector<std::string> names = experiment_names();
  names.push_back("all");
  for (const auto& n : names)
    app.add_subcommand(n, n == "all" ? std::string("Run every experiment") : "Run the " + n + " experiment")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  std::vector<std::string> todo;
  if (cmd == "all") todo = experiment_names();
  else todo = {cmd};

  std::vector<ExperimentConfig> configs;
  try {
    std::optional<io::ConfigMap> file;
    if (!o.config.empty()) file = io::load_config_file(o.config);
    for (const auto& name : todo) configs.push_back(build_config(name, o, file));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error at line %d, column %d: %s\n", e.line, e.column, e.what());
    return kExitConfig;
  } catch (const Error& e) {
    std::fprintf(stderr, "invalid parameter: %s\n", e.what());
    return kExitConfig;
  }

  bool all_pass = true;
  std::vector<TestReport> combined;
  try {
    for (const auto& c : configs) {
      const auto r = run_experiment(c);
      write_outputs(c, r);
      print_reports(r.reports);
      all_pass = all_pass && r.passed();
      combined.insert(combined.end(), r.reports.begin(), r.reports.end());
    }
  } catch (const ResourceError& e) {
    std::fprintf(stderr, "resource exhausted: %s (%zu bytes required)\n", e.what(), e.required_bytes);
    return kExitResource;
  } catch (const std::bad_alloc&) {
    std::fprintf(stderr, "resource exhausted: out of memory\n");
    return kExitResource;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "invalid parameter: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFail;
  }
  if (cmd == "all" && !configs.empty()) {
    fs::create_directories(configs.front().out_dir);
    io::write_text((fs::path(configs.front().out_dir) / "results.csv").string(), io::results_csv(combined));
  }
  std::printf("digest %s\n", io::results_digest(combined).c_str());
  return all_pass ? 0 : kExitFail;
}
