#include "polymer/io.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "polymer/errors.hpp"

namespace polymer::io {

using nlohmann::json;

namespace {

std::string trim(const std::string& s, std::size_t& lead) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  lead = b;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto c = raw.find_first_of("#;"); c != std::string::npos) raw.erase(c);
    std::size_t lead = 0;
    const std::string s = trim(raw, lead);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", line, static_cast<int>(lead + s.size()));
      std::size_t l2 = 0;
      section = trim(s.substr(1, s.size() - 2), l2);
      if (!valid_key(section)) throw ConfigError("invalid section name", line, static_cast<int>(lead + 2 + l2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line, static_cast<int>(lead + 1));
    std::size_t kl = 0, vl = 0;
    const std::string key = trim(s.substr(0, eq), kl);
    const std::string val = trim(s.substr(eq + 1), vl);
    if (!valid_key(key)) throw ConfigError("invalid key", line, static_cast<int>(lead + kl + 1));
    const int vcol = static_cast<int>(lead + eq + 1 + vl + 1);
    if (val.empty()) throw ConfigError("missing value for '" + key + "'", line, vcol);
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full)) throw ConfigError("duplicate key '" + full + "'", line, static_cast<int>(lead + kl + 1));
    out[full] = {val, line, vcol};
  }
  return out;
}

ConfigMap parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Map the byte offset back to line/column.
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(std::string("malformed JSON: ") + e.what(), line, col);
  }
  if (!j.is_object()) throw ConfigError("JSON config must be an object", 1, 1);
  // A run manifest carries its configuration under "config".
  if (j.contains("config") && j["config"].is_object()) j = json(j["config"]);
  ConfigMap out;
  auto scalar = [](const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
      std::string s;
      for (const auto& e : v) s += (s.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
      return s;
    }
    return v.dump();
  };
  for (const auto& [k, v] : j.items()) {
    if (v.is_object()) {
      for (const auto& [k2, v2] : v.items()) {
        if (v2.is_object()) {
          for (const auto& [k3, v3] : v2.items()) out[k + "." + k2 + "." + k3] = {scalar(v3), 0, 0};
        } else {
          out[k + "." + k2] = {scalar(v2), 0, 0};
        }
      }
    } else {
      out[k] = {scalar(v), 0, 0};
    }
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  out << text;
}

ConfigMap load_config_file(const std::string& path) {
  const std::string text = read_text(path);
  const auto p = text.find_first_not_of(" \t\r\n");
  if (p != std::string::npos && text[p] == '{') return parse_config_json(text);
  return parse_config_text(text);
}

namespace {

double to_double(const ConfigValue& v, const std::string& key) {
  double d = 0.0;
  const char* b = v.text.data();
  const char* e = b + v.text.size();
  auto [p, ec] = std::from_chars(b, e, d);
  if (ec != std::errc() || p != e)
    throw ConfigError("'" + key + "' expects a number, got '" + v.text + "'", v.line,
                      v.column + static_cast<int>(p - b));
  return d;
}

template <class Int>
Int to_int(const ConfigValue& v, const std::string& key) {
  Int d = 0;
  const char* b = v.text.data();
  const char* e = b + v.text.size();
  auto [p, ec] = std::from_chars(b, e, d);
  if (ec != std::errc() || p != e)
    throw ConfigError("'" + key + "' expects an integer, got '" + v.text + "'", v.line,
                      v.column + static_cast<int>(p - b));
  return d;
}

std::vector<int> to_int_list(const ConfigValue& v, const std::string& key) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= v.text.size()) {
    auto end = v.text.find(',', start);
    if (end == std::string::npos) end = v.text.size();
    std::size_t lead = 0;
    const std::string tok = trim(v.text.substr(start, end - start), lead);
    out.push_back(to_int<int>({tok, v.line, v.column + static_cast<int>(start + lead)}, key));
    start = end + 1;
  }
  return out;
}

bool to_bool(const ConfigValue& v, const std::string& key) {
  if (v.text == "true" || v.text == "1" || v.text == "yes") return true;
  if (v.text == "false" || v.text == "0" || v.text == "no") return false;
  throw ConfigError("'" + key + "' expects true/false", v.line, v.column);
}

void apply_key(const std::string& key, const ConfigValue& v, ExperimentConfig& c) {
  auto wrap = [&](auto&& f) {
    try {
      f();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what(), v.line, v.column);
    }
  };
  if (key == "hurst") c.env.hurst = to_double(v, key);
  else if (key == "delta") {
    c.env.delta = to_double(v, key);
    c.delta_fixed = true;
  } else if (key == "cutoff") c.env.cutoff = to_int<int>(v, key);
  else if (key == "xi") wrap([&] { c.env.xi = parse_xi_dist(v.text); });
  else if (key == "shape") wrap([&] { c.env.shape = parse_kernel_shape(v.text); });
  else if (key == "psi0") wrap([&] { c.env.psi0 = parse_psi0_rule(v.text); });
  else if (key == "lambda") {
    c.env.lambda_target = to_double(v, key);
    c.lambda_fixed = true;
  } else if (key == "lambda_fixed") c.lambda_fixed = to_bool(v, key);
  else if (key == "n") c.n_grid = to_int_list(v, key);
  else if (key == "beta") c.beta = to_double(v, key);
  else if (key == "replicas") c.replicas = to_int<int>(v, key);
  else if (key == "seed") c.seed = to_int<std::uint64_t>(v, key);
  else if (key == "threads") c.threads = to_int<int>(v, key);
  else if (key == "out") c.out_dir = v.text;
  else if (key == "checkpoint") c.checkpoint = v.text;
  else if (key == "q") c.q = to_int<int>(v, key);
  else if (key == "iota") c.iota = to_double(v, key);
  else if (key == "k") c.k = to_int<int>(v, key);
  else if (key == "delta_fixed") c.delta_fixed = to_bool(v, key);
  else if (key.rfind("threshold.", 0) == 0) c.thresholds[key.substr(10)] = to_double(v, key);
  else if (key.rfind("param.", 0) == 0) c.params[key.substr(6)] = to_double(v, key);
  else if (key == "experiment") c.experiment = v.text;
  else throw ConfigError("unknown key '" + key + "'", v.line, v.column);
}

}  // namespace

void apply_config(const ConfigMap& map, ExperimentConfig& cfg) {
  const auto& names = experiment_names();
  auto is_section = [&](const std::string& s) {
    return std::find(names.begin(), names.end(), s) != names.end() || s == "all";
  };
  // Top-level keys first, then the experiment's own section.
  for (const auto& [k, v] : map) {
    const auto dot = k.find('.');
    if (dot != std::string::npos && is_section(k.substr(0, dot))) continue;
    apply_key(k, v, cfg);
  }
  for (const auto& [k, v] : map) {
    const auto dot = k.find('.');
    if (dot == std::string::npos || !is_section(k.substr(0, dot))) continue;
    if (k.substr(0, dot) == cfg.experiment) apply_key(k.substr(dot + 1), v, cfg);
  }
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["hurst"] = c.env.hurst;
  j["delta"] = c.env.delta;
  j["delta_fixed"] = c.delta_fixed;
  j["cutoff"] = c.env.cutoff;
  j["xi"] = to_string(c.env.xi);
  j["shape"] = to_string(c.env.shape);
  j["psi0"] = to_string(c.env.psi0);
  j["lambda"] = c.env.lambda_target;
  j["lambda_fixed"] = c.lambda_fixed;
  j["n"] = c.n_grid;
  j["beta"] = c.beta;
  j["replicas"] = c.replicas;
  j["seed"] = std::to_string(c.seed);
  j["threads"] = c.threads;
  j["out"] = c.out_dir;
  if (!c.checkpoint.empty()) j["checkpoint"] = c.checkpoint;
  j["q"] = c.q;
  j["iota"] = c.iota;
  j["k"] = c.k;
  json th = json::object();
  for (const auto& [k, v] : c.thresholds) th[k] = v;
  j["threshold"] = th;
  json pa = json::object();
  for (const auto& [k, v] : c.params) pa[k] = v;
  j["param"] = pa;
  return j.dump(2);
}

std::string results_csv(const std::vector<TestReport>& reports, bool include_runtime) {
  std::ostringstream os;
  os << "experiment,n,beta,H,statistic,value,se,threshold,pass,seed";
  if (include_runtime) os << ",runtime_ms";
  os << '\n';
  for (const auto& r : reports) {
    os << r.experiment << ',' << r.n << ',' << fmt(r.beta) << ',' << fmt(r.hurst) << ',' << r.statistic << ','
       << fmt(r.value) << ',' << fmt(r.se) << ',' << fmt(r.threshold) << ','
       << (r.informational ? "info" : (r.pass ? "true" : "false")) << ',' << r.seed;
    if (include_runtime) os << ',' << fmt(std::round(r.runtime_ms * 1000.0) / 1000.0);
    os << '\n';
  }
  return os.str();
}

std::string results_digest(const std::vector<TestReport>& reports) {
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : results_csv(reports, false)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string manifest_json(const ExperimentConfig& cfg, const std::vector<TestReport>& reports) {
  json j;
  j["config"] = json::parse(config_to_json(cfg));
  j["digest"] = results_digest(reports);
  json rows = json::array();
  for (const auto& r : reports) {
    json row{{"statistic", r.statistic}, {"n", r.n}, {"value", r.value}, {"se", r.se},
             {"threshold", r.threshold}, {"seed", std::to_string(r.seed)}};
    row["verdict"] = r.informational ? "info" : (r.pass ? "pass" : "fail");
    if (!r.note.empty()) row["note"] = r.note;
    rows.push_back(row);
  }
  j["results"] = rows;
  return j.dump(2);
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary environment I/O assumes little-endian");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw ArgumentError("truncated environment file");
  return v;
}

constexpr char kMagic[8] = {'P', 'L', 'Y', 'E', 'N', 'V', '1', '\0'};

}  // namespace

void save_environment(const std::string& path, const EnvironmentField& env) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ArgumentError("cannot write '" + path + "'");
  os.write(kMagic, sizeof kMagic);
  put<double>(os, env.params().hurst);
  put<double>(os, env.params().delta);
  put<std::int64_t>(os, env.params().cutoff);
  put<std::int64_t>(os, env.n_time());
  put<std::int64_t>(os, env.x_lo());
  put<std::int64_t>(os, env.x_hi());
  put<std::uint64_t>(os, env.seed());
  os.write(reinterpret_cast<const char*>(env.values().data()),
           static_cast<std::streamsize>(env.values().size() * sizeof(double)));
}

EnvironmentField load_environment(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("cannot open '" + path + "'");
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw ArgumentError("not an environment file");
  EnvParams p;
  p.hurst = get<double>(is);
  p.delta = get<double>(is);
  p.cutoff = static_cast<int>(get<std::int64_t>(is));
  const auto n = get<std::int64_t>(is);
  const auto lo = get<std::int64_t>(is);
  const auto hi = get<std::int64_t>(is);
  const auto seed = get<std::uint64_t>(is);
  EnvironmentField f(p, static_cast<int>(n), static_cast<int>(lo), static_cast<int>(hi), seed);
  auto& v = f.values();
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double))))
    throw ArgumentError("truncated environment file");
  return f;
}

std::string gamma_csv(const EnvParams& p, const std::vector<int>& lags) {
  const auto kern = make_kernel(p);
  const double lam = tail_constant(p);
  std::ostringstream os;
  os << "k,gamma,asymptote,ratio\n";
  for (int k : lags) {
    const double g = exact_gamma(k, kern);
    const double a = k > 0 ? lam * std::pow(static_cast<double>(k), 1.0 - 2.0 * p.alpha()) : std::nan("");
    os << k << ',' << fmt(g) << ',' << fmt(a) << ',' << fmt(g / a) << '\n';
  }
  return os.str();
}

std::string partition_csv(const PartitionSurface& s) {
  std::ostringstream os;
  os << "i,x,value,log_scale\n";
  const int k0 = s.start_time();
  for (int k = k0; k <= s.n(); ++k) {
    const double* lv = s.level(k);
    for (int j = 0; j < s.level_size(k); ++j)
      os << k << ',' << s.level_lo(k) + 2 * j << ',' << fmt(lv[j]) << ',' << fmt(s.log_scale(k)) << '\n';
  }
  return os.str();
}

std::string partition_summary_json(const PartitionSurface& s) {
  json j;
  j["endpoint"] = to_string(s.endpoint());
  j["variant"] = to_string(s.variant);
  j["n"] = s.n();
  j["beta"] = s.beta;
  j["hurst"] = s.hurst;
  j["seed"] = std::to_string(s.seed);
  j["start"] = {s.start_time(), s.start_site()};
  j["value"] = s.endpoint_value();
  j["warnings"] = s.warnings;
  return j.dump(2);
}

}  // namespace polymer::io
