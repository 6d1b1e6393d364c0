#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "polymer/errors.hpp"
#include "polymer/harness.hpp"
#include "polymer/rng.hpp"

namespace polymer {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("POLYMER_LIMITS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::uint64_t replica_seed(std::uint64_t master, std::uint64_t tag, int index) {
  return stream_key(master, tag, static_cast<std::uint64_t>(index));
}

std::vector<double> ReplicaResults::column(int c) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (ok[i]) out.push_back(rows[i].at(c));
  return out;
}

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void load_checkpoint(const std::string& path, std::uint64_t master, std::uint64_t tag, ReplicaResults& r,
                     std::vector<char>& done) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    long idx;
    std::uint64_t seed;
    std::string status;
    if (!(ls >> idx >> seed >> status)) continue;  // torn trailing line
    if (idx < 0 || idx >= static_cast<long>(r.rows.size())) continue;
    if (seed != replica_seed(master, tag, static_cast<int>(idx))) continue;
    if (status == "ok") {
      std::vector<double> vals;
      std::string tok;
      while (ls >> tok) vals.push_back(std::strtod(tok.c_str(), nullptr));
      if (static_cast<int>(vals.size()) != r.width) continue;
      r.rows[idx] = std::move(vals);
      r.ok[idx] = 1;
    } else {
      r.ok[idx] = 0;
    }
    if (!done[idx]) ++r.resumed;
    done[idx] = 1;
  }
}

}  // namespace

ReplicaResults run_replicas(int M, std::uint64_t master_seed, int width, const ReplicaFn& fn,
                            const ReplicaOptions& opt) {
  if (M < 0 || width < 1) throw ArgumentError("run_replicas needs M >= 0 and width >= 1");
  ReplicaResults r;
  r.width = width;
  r.rows.assign(M, std::vector<double>(width, std::nan("")));
  r.ok.assign(M, 0);
  r.seeds.resize(M);
  for (int i = 0; i < M; ++i) r.seeds[i] = replica_seed(master_seed, opt.tag, i);
  std::vector<char> done(M, 0);
  std::vector<std::string> errs(M);
  if (!opt.checkpoint.empty()) load_checkpoint(opt.checkpoint, master_seed, opt.tag, r, done);

  std::ofstream ckpt;
  if (!opt.checkpoint.empty()) ckpt.open(opt.checkpoint, std::ios::app);
  std::mutex ckpt_mutex;
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < M; i = next++) {
      if (done[i]) continue;
      std::string status = "ok";
      try {
        auto v = fn(i, r.seeds[i]);
        if (static_cast<int>(v.size()) != width) throw ArgumentError("replica returned wrong width");
        r.rows[i] = std::move(v);
        r.ok[i] = 1;
      } catch (const std::exception& e) {
        errs[i] = e.what();
        status = "failed";
      }
      if (ckpt.is_open()) {
        std::ostringstream os;
        os << i << ' ' << r.seeds[i] << ' ' << status;
        if (r.ok[i])
          for (double v : r.rows[i]) os << ' ' << hex(v);
        std::lock_guard lock(ckpt_mutex);
        ckpt << os.str() << '\n' << std::flush;
      }
    }
  };
  const int nt = std::min(resolve_threads(opt.threads), std::max(M, 1));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  }
  for (int i = 0; i < M; ++i)
    if (!r.ok[i]) {
      r.failed.push_back(i);
      r.errors.push_back(errs[i].empty() ? "failed in a previous run" : errs[i]);
    }
  return r;
}

}  // namespace polymer
