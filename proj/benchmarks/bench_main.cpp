#include <benchmark/benchmark.h>

#include <vector>

#include "polymer/env_field.hpp"
#include "polymer/experiments.hpp"
#include "polymer/partition.hpp"
#include "polymer/rect.hpp"
#include "polymer/tensor.hpp"
#include "polymer/ustat.hpp"
#include "polymer/walk_kernel.hpp"

using namespace polymer;

namespace {

EnvParams params(int cutoff) {
  EnvParams p;
  p.cutoff = cutoff;
  p.delta = calibrate_delta(p.hurst);
  return p;
}

void BM_EnvironmentRow(benchmark::State& st) {
  const int width = static_cast<int>(st.range(0));
  const auto method = st.range(1) ? ConvolutionMethod::Fft : ConvolutionMethod::Direct;
  const EnvironmentSampler sampler(params(1024), 0, width - 1, method);
  auto scratch = sampler.make_scratch();
  std::vector<double> row(width);
  int i = 0;
  for (auto _ : st) {
    sampler.fill_row(++i, 1, row, scratch);
    benchmark::DoNotOptimize(row.data());
  }
  st.SetItemsProcessed(st.iterations() * width);
}
BENCHMARK(BM_EnvironmentRow)->ArgsProduct({{257, 2049, 8193}, {0, 1}});

void BM_WalkRow(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(walk_row(n));
}
BENCHMARK(BM_WalkRow)->Arg(256)->Arg(4096);

void BM_ModifiedPartition(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto env = sample_environment(params(1024), n, -n, n, 3);
  PartitionParams pp;
  pp.beta = 0.5;
  pp.n = n;
  for (auto _ : st) benchmark::DoNotOptimize(dp_modified_partition(env, pp, Endpoint::PointToPoint));
}
BENCHMARK(BM_ModifiedPartition)->Arg(256)->Arg(1024);

void BM_TwoWalkSecondMoment(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto p = params(1024);
  const auto gamma = make_covariance_model(p, 2 * n + 2);
  for (auto _ : st)
    benchmark::DoNotOptimize(two_walk_second_moment(n, 1.0, p.hurst, gamma, Endpoint::PointToPoint));
}
BENCHMARK(BM_TwoWalkSecondMoment)->Arg(64)->Arg(256);

void BM_UStatSecondOrder(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto env = sample_environment(params(256), n, -n, n, 4);
  UStatSpec spec;
  spec.k = 2;
  spec.n = n;
  spec.weight = TensorKernel::power(RectFn{}, 2);
  for (auto _ : st) benchmark::DoNotOptimize(ustat_eval(env, spec));
}
BENCHMARK(BM_UStatSecondOrder)->Arg(256)->Arg(1024);

void BM_WalkVarianceQuadrature(benchmark::State& st) {
  const auto p = params(100000);
  for (auto _ : st) benchmark::DoNotOptimize(walk_variance_quadrature(1 << 14, p));
}
BENCHMARK(BM_WalkVarianceQuadrature)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
