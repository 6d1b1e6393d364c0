#include <gtest/gtest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polymer/env_field.hpp"
#include "polymer/errors.hpp"
#include "polymer/harness.hpp"
#include "polymer/io.hpp"
#include "polymer/partition.hpp"

using namespace polymer;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("polymer_io_" + name)).string();
}

ConfigError config_error(const std::string& text) {
  try {
    ExperimentConfig c = default_config("clt");
    io::apply_config(io::parse_config_text(text), c);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return ConfigError("", 0, 0);
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

TestReport report(const std::string& stat, double value, double runtime) {
  TestReport r;
  r.experiment = "clt";
  r.statistic = stat;
  r.n = 256;
  r.beta = 1.0;
  r.hurst = 0.75;
  r.value = value;
  r.se = 0.01;
  r.threshold = 0.05;
  r.pass = true;
  r.seed = 99;
  r.runtime_ms = runtime;
  return r;
}

}  // namespace

TEST(ConfigText, SectionsCommentsAndPositions) {
  const auto m = io::parse_config_text("# comment\nhurst = 0.8\n\n[clt]\n  beta=2 ; trailing\nn = 64, 128\n");
  ASSERT_EQ(m.count("hurst"), 1u);
  EXPECT_EQ(m.at("hurst").text, "0.8");
  EXPECT_EQ(m.at("hurst").line, 2);
  EXPECT_EQ(m.at("hurst").column, 9);
  EXPECT_EQ(m.at("clt.beta").line, 5);
  EXPECT_EQ(m.at("clt.n").text, "64, 128");
}

TEST(ConfigText, SyntaxErrorsCarryLineAndColumn) {
  try {
    io::parse_config_text("hurst = 0.8\nbeta 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line, 2);
    EXPECT_GE(e.column, 1);
  }
  try {
    io::parse_config_text("hurst = 0.8\n[clt\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line, 2);
  }
  EXPECT_THROW(io::parse_config_text("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(io::parse_config_text("a =\n"), ConfigError);
}

TEST(ConfigApply, ValueErrorsPointAtTheOffendingCharacter) {
  auto e = config_error("seed = 1\nhurst = 0.7x\n");
  EXPECT_EQ(e.line, 2);
  EXPECT_EQ(e.column, 12);
  e = config_error("n = 64, 12a\n");
  EXPECT_EQ(e.line, 1);
  EXPECT_EQ(e.column, 11);
  e = config_error("\n\nbogus = 3\n");
  EXPECT_EQ(e.line, 3);
  EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  e = config_error("xi = cauchy\n");
  EXPECT_EQ(e.line, 1);
  EXPECT_EQ(e.column, 6);
}

TEST(ConfigApply, SectionOverridesTopLevel) {
  ExperimentConfig c = default_config("clt");
  io::apply_config(io::parse_config_text("beta = 2\nreplicas = 10\n[clt]\nbeta = 3\n[tightness]\nbeta = 4\n"), c);
  EXPECT_EQ(c.beta, 3.0);
  EXPECT_EQ(c.replicas, 10);
}

TEST(ConfigApply, AllKeys) {
  ExperimentConfig c = default_config("clt");
  io::apply_config(io::parse_config_text("hurst = 0.8\ndelta = 0.3\ncutoff = 500\nxi = rademacher\n"
                                         "n = 8,16\nseed = 18446744073709551615\nthreads = 2\n"
                                         "threshold.ks = 0.02\nparam.window = 7\nk = 2\nq = 3\niota = 0.6\n"),
                   c);
  EXPECT_EQ(c.env.hurst, 0.8);
  EXPECT_EQ(c.env.delta, 0.3);
  EXPECT_TRUE(c.delta_fixed);
  EXPECT_EQ(c.env.cutoff, 500);
  EXPECT_EQ(c.env.xi, XiDist::Rademacher);
  EXPECT_EQ(c.n_grid, (std::vector<int>{8, 16}));
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  EXPECT_EQ(c.threads, 2);
  EXPECT_EQ(c.threshold("ks"), 0.02);
  EXPECT_EQ(c.param("window", 0), 7.0);
  EXPECT_EQ(c.k, 2);
  EXPECT_EQ(c.q, 3);
  EXPECT_EQ(c.iota, 0.6);
}

TEST(ConfigJson, NestedObjectsAndArrays) {
  const auto m = io::parse_config_json(R"({"hurst": 0.7, "n": [32, 64], "clt": {"beta": 1.5}, "threshold": {"x": 0.1}})");
  EXPECT_EQ(m.at("n").text, "32,64");
  EXPECT_EQ(m.at("clt.beta").text, "1.5");
  ExperimentConfig c = default_config("clt");
  io::apply_config(m, c);
  EXPECT_EQ(c.n_grid, (std::vector<int>{32, 64}));
  EXPECT_EQ(c.beta, 1.5);
  EXPECT_EQ(c.threshold("x"), 0.1);
}

TEST(ConfigJson, MalformedJsonReportsPosition) {
  try {
    io::parse_config_json("{\n  \"hurst\": 0.7,\n  \"beta\": ,\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line, 3);
    EXPECT_GT(e.column, 1);
  }
}

TEST(ConfigJson, RoundTripThroughManifest) {
  ExperimentConfig c = default_config("ustat-limit");
  c.env.hurst = 0.8;
  c.n_grid = {64, 512};
  c.seed = 123456789012345ULL;
  c.thresholds["ks"] = 0.001;
  c.params["cells"] = 4;
  c.checkpoint = "/tmp/x";
  const std::string path = temp_path("manifest.json");
  io::write_text(path, io::manifest_json(c, {report("a", 1.0, 3.0)}));
  ExperimentConfig back;
  io::apply_config(io::load_config_file(path), back);
  EXPECT_EQ(back.experiment, c.experiment);
  EXPECT_EQ(io::config_to_json(back), io::config_to_json(c));
  std::remove(path.c_str());
}

TEST(ConfigFile, DispatchesOnFirstCharacter) {
  const std::string a = temp_path("a.cfg"), b = temp_path("b.json");
  io::write_text(a, "beta = 2\n");
  io::write_text(b, "  \n{\"beta\": 2}");
  EXPECT_EQ(io::load_config_file(a).at("beta").text, "2");
  EXPECT_EQ(io::load_config_file(b).at("beta").text, "2");
  std::remove(a.c_str());
  std::remove(b.c_str());
  EXPECT_THROW(io::load_config_file(temp_path("missing.cfg")), Error);
}

TEST(ResultsCsv, ColumnsAndVerdicts) {
  auto info = report("b", 2.0, 1.0);
  info.informational = true;
  auto fail = report("c", 3.0, 1.0);
  fail.pass = false;
  const auto lines = split_lines(io::results_csv({report("a", 1.0, 12.5), info, fail}));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "experiment,n,beta,H,statistic,value,se,threshold,pass,seed,runtime_ms");
  EXPECT_EQ(lines[1].substr(0, 8), "clt,256,");
  EXPECT_NE(lines[1].find(",true,99,"), std::string::npos);
  EXPECT_NE(lines[2].find(",info,99,"), std::string::npos);
  EXPECT_NE(lines[3].find(",false,99,"), std::string::npos);
  const auto bare = split_lines(io::results_csv({report("a", 1.0, 12.5)}, false));
  EXPECT_EQ(bare[0], "experiment,n,beta,H,statistic,value,se,threshold,pass,seed");
}

TEST(ResultsDigest, IgnoresRuntimeOnly) {
  const auto d1 = io::results_digest({report("a", 1.0, 5.0), report("b", 2.0, 7.0)});
  const auto d2 = io::results_digest({report("a", 1.0, 500.0), report("b", 2.0, 0.1)});
  EXPECT_EQ(d1, d2);
  EXPECT_EQ(d1.size(), 16u);
  EXPECT_NE(d1, io::results_digest({report("a", 1.0, 5.0), report("b", 2.0000001, 7.0)}));
  EXPECT_NE(d1, io::results_digest({report("b", 2.0, 7.0), report("a", 1.0, 5.0)}));
}

TEST(Manifest, CarriesDigestAndRows) {
  const auto c = default_config("clt");
  const auto j = nlohmann::json::parse(io::manifest_json(c, {report("a", 1.0, 5.0)}));
  EXPECT_EQ(j["digest"], io::results_digest({report("a", 1.0, 5.0)}));
  EXPECT_EQ(j["results"][0]["verdict"], "pass");
  EXPECT_EQ(j["config"]["experiment"], "clt");
}

TEST(EnvironmentFile, BitExactRoundTrip) {
  EnvParams p;
  p.cutoff = 300;
  p.delta = calibrate_delta(p.hurst);
  const auto env = sample_environment(p, 12, -20, 20, 77);
  const std::string path = temp_path("env.bin");
  io::save_environment(path, env);
  const auto back = io::load_environment(path);
  EXPECT_EQ(back.n_time(), 12);
  EXPECT_EQ(back.x_lo(), -20);
  EXPECT_EQ(back.x_hi(), 20);
  EXPECT_EQ(back.seed(), 77u);
  EXPECT_EQ(back.params().hurst, p.hurst);
  EXPECT_EQ(back.params().delta, p.delta);
  EXPECT_EQ(back.params().cutoff, 300);
  EXPECT_EQ(back.values(), env.values());

  const std::string bytes = io::read_text(path);
  EXPECT_EQ(std::memcmp(bytes.data(), "PLYENV1\0", 8), 0);
  EXPECT_EQ(bytes.size(), 8 + 2 * 8 + 4 * 8 + 8 + env.values().size() * 8);

  io::write_text(path, bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(io::load_environment(path), ArgumentError);
  io::write_text(path, "NOTENV\0\0rest");
  EXPECT_THROW(io::load_environment(path), ArgumentError);
  std::remove(path.c_str());
}

TEST(GammaCsv, Columns) {
  EnvParams p;
  p.cutoff = 1000;
  p.delta = calibrate_delta(p.hurst);
  const auto lines = split_lines(io::gamma_csv(p, {0, 1, 10}));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "k,gamma,asymptote,ratio");
  EXPECT_EQ(lines[3].substr(0, 3), "10,");
  std::istringstream row(lines[3]);
  std::string k, g, a, r;
  std::getline(row, k, ',');
  std::getline(row, g, ',');
  std::getline(row, a, ',');
  std::getline(row, r, ',');
  EXPECT_NEAR(std::stod(g), exact_gamma(10, p), 1e-12 * std::abs(exact_gamma(10, p)));
  EXPECT_NEAR(std::stod(r), std::stod(g) / std::stod(a), 1e-9);
}

TEST(PartitionCsv, ConeRowsAndSummary) {
  EnvParams p;
  p.cutoff = 50;
  p.delta = calibrate_delta(p.hurst);
  const int n = 6;
  const auto env = sample_environment(p, n, -n, n, 3);
  PartitionParams pp;
  pp.beta = 0.5;
  pp.n = n;
  const auto s = dp_modified_partition(env, pp, Endpoint::PointToPoint);
  const auto lines = split_lines(io::partition_csv(s));
  EXPECT_EQ(lines[0], "i,x,value,log_scale");
  // One row per cone cell from the start level to n.
  EXPECT_EQ(lines.size(), 1u + (n + 1) * (n + 2) / 2);
  const auto j = nlohmann::json::parse(io::partition_summary_json(s));
  EXPECT_EQ(j["n"], n);
  EXPECT_EQ(j["endpoint"], to_string(Endpoint::PointToPoint));
  EXPECT_DOUBLE_EQ(j["value"].get<double>(), s.endpoint_value());
}
