#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "polymer/env_field.hpp"
#include "polymer/errors.hpp"
#include "polymer/experiments.hpp"
#include "polymer/harness.hpp"
#include "polymer/numeric.hpp"
#include "polymer/rng.hpp"
#include "polymer/stats.hpp"
#include "polymer/walk_kernel.hpp"
#include "test_util.hpp"

using namespace polymer;

namespace {

// Alternating series for P(sup |B| > t), summed until the terms vanish.
double kolmogorov_series(double t) {
  double s = 0;
  for (int k = 1; k < 200; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return 2.0 * s;
}

double ks_statistic(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0;
  for (std::size_t i = 0; i < u.size(); ++i)
    d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
  return d;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("polymer_test_" + name)).string();
}

}  // namespace

// ------------------------------------------------------------------ stats

TEST(Stats, NormalCdfMatchesErfc) {
  for (double x : {-5.0, -1.3, 0.0, 0.4, 2.7}) {
    EXPECT_NEAR(stats::normal_cdf(x), 0.5 * std::erfc(-x / std::sqrt(2.0)), 1e-15);
    EXPECT_NEAR(stats::normal_cdf(1.0 + 2.0 * x, 1.0, 2.0), stats::normal_cdf(x), 1e-15);
  }
}

TEST(Stats, KolmogorovLimitMatchesSeries) {
  for (double t : {0.3, 0.6, 1.0, 1.3581, 1.6276, 2.5})
    EXPECT_NEAR(stats::kolmogorov_q(t), kolmogorov_series(t), 1e-12) << t;
  EXPECT_NEAR(stats::kolmogorov_q(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(stats::kolmogorov_q(1.6276), 0.01, 1e-4);
}

TEST(Stats, ExactKolmogorovSingleObservation) {
  // D_1 = max(U, 1 - U), so P(D_1 < d) = 2d - 1 on [1/2, 1].
  for (double d : {0.55, 0.7, 0.9, 0.99}) EXPECT_NEAR(stats::kolmogorov_cdf_exact(1, d), 2 * d - 1, 1e-12) << d;
}

TEST(Stats, ExactKolmogorovSmallSampleCriticalValues) {
  // Tabulated two-sided critical values.
  EXPECT_NEAR(stats::kolmogorov_cdf_exact(5, 0.56328), 0.95, 2e-3);
  EXPECT_NEAR(stats::kolmogorov_cdf_exact(10, 0.40925), 0.95, 2e-3);
  EXPECT_NEAR(stats::kolmogorov_cdf_exact(10, 0.48893), 0.99, 2e-3);
}

TEST(Stats, ExactKolmogorovAgreesWithSimulation) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> U(0, 1);
  const int n = 7, reps = 100000;
  std::vector<double> ds(reps);
  for (auto& d : ds) {
    std::vector<double> u(n);
    for (auto& v : u) v = U(gen);
    d = ks_statistic(u);
  }
  for (double d : {0.25, 0.35, 0.5}) {
    const double frac = std::count_if(ds.begin(), ds.end(), [d](double v) { return v < d; }) / double(reps);
    const double se = std::sqrt(frac * (1 - frac) / reps);
    EXPECT_NEAR(stats::kolmogorov_cdf_exact(n, d), frac, 4 * se) << d;
  }
}

TEST(Stats, OneSampleStatisticAndPValueUniformUnderNull) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> U(0, 1);
  const int reps = 4000;
  int below5 = 0, below50 = 0;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> u(50);
    for (auto& v : u) v = U(gen);
    const auto res = stats::ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); });
    ASSERT_NEAR(res.statistic, ks_statistic(u), 1e-15);
    below5 += res.p_value < 0.05;
    below50 += res.p_value < 0.5;
  }
  EXPECT_NEAR(below5 / double(reps), 0.05, 4 * std::sqrt(0.05 * 0.95 / reps));
  EXPECT_NEAR(below50 / double(reps), 0.5, 4 * std::sqrt(0.25 / reps));
}

TEST(Stats, OneSampleRejectsWrongScale) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> N(0, 1.3);
  std::vector<double> x(2000);
  for (auto& v : x) v = N(gen);
  EXPECT_LT(stats::ks_one_sample(x, [](double v) { return stats::normal_cdf(v); }).p_value, 1e-3);
}

TEST(Stats, TwoSampleUnderNullAndAlternative) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> N(0, 1);
  const int reps = 1000;
  int below5 = 0;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> a(200), b(300);
    for (auto& v : a) v = N(gen);
    for (auto& v : b) v = N(gen);
    below5 += stats::ks_two_sample(a, b).p_value < 0.05;
  }
  // The limiting law is slightly conservative for discrete statistics.
  EXPECT_LT(below5 / double(reps), 0.05 + 4 * std::sqrt(0.05 * 0.95 / reps));
  EXPECT_GT(below5 / double(reps), 0.01);
  std::vector<double> a(1000), b(1000);
  for (auto& v : a) v = N(gen);
  for (auto& v : b) v = N(gen) + 0.3;
  const auto res = stats::ks_two_sample(a, b);
  EXPECT_LT(res.p_value, 1e-6);
  EXPECT_EQ(res.n, 1000u);
  EXPECT_EQ(res.m, 1000u);
}

TEST(Stats, SummaryMatchesTwoPassOracle) {
  std::mt19937_64 gen(2);
  std::gamma_distribution<double> G(2.0, 1.5);
  std::vector<double> x(5000);
  for (auto& v : x) v = G(gen) + 1e6;
  const auto s = stats::summarize(x);
  const auto o = testutil::moments(x);
  EXPECT_EQ(s.n, x.size());
  EXPECT_NEAR(s.mean, o.mean, 1e-9);
  EXPECT_NEAR(s.variance, o.var, 1e-9 * o.var + 1e-6);
  EXPECT_NEAR(s.se, o.se, 1e-6 * o.se);
  EXPECT_NEAR(s.var_se, o.var_se, 0.05 * o.var_se);
}

TEST(Stats, StandardErrorShrinksWithSampleSize) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> N(0, 1);
  std::vector<double> x(8000);
  for (auto& v : x) v = N(gen);
  const auto half = stats::summarize(std::span<const double>(x.data(), 4000));
  const auto full = stats::summarize(x);
  EXPECT_NEAR(half.se / full.se, std::sqrt(2.0), 0.05);
}

TEST(Stats, RawMomentAndQuantile) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto m2 = stats::raw_moment(x, 2);
  EXPECT_DOUBLE_EQ(m2.value, 7.5);
  const std::vector<double> sq{1, 4, 9, 16};
  EXPECT_NEAR(m2.se, testutil::moments(sq).se, 1e-12);
  EXPECT_DOUBLE_EQ(stats::quantile({4, 1, 3, 2}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(stats::quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(stats::quantile({4, 1, 3, 2}, 1.0), 4.0);
}

TEST(Stats, CorrelationAndLineFit) {
  std::vector<double> x, y, z;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i);
    y.push_back(2.0 * i + 1.0);
    z.push_back(-0.5 * i);
  }
  EXPECT_NEAR(stats::correlation(x, y), 1.0, 1e-14);
  EXPECT_NEAR(stats::correlation(x, z), -1.0, 1e-14);
  const auto f = stats::fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-13);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.slope_se, 0.0, 1e-12);

  std::mt19937_64 gen(4);
  std::normal_distribution<double> N(0, 1);
  std::vector<double> yn;
  for (double v : x) yn.push_back(0.7 * v - 3 + N(gen));
  const auto g = stats::fit_line(x, yn);
  const double mx = 9.5;
  double sxx = 0, ssr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    const double r = yn[i] - g.intercept - g.slope * x[i];
    ssr += r * r;
  }
  EXPECT_NEAR(g.slope_se, std::sqrt(ssr / (x.size() - 2) / sxx), 1e-12);
}

// --------------------------------------------------------------- replicas

TEST(Replicas, SeedsAreDeterministicAndDistinct) {
  EXPECT_EQ(replica_seed(1, 2, 3), replica_seed(1, 2, 3));
  EXPECT_NE(replica_seed(1, 2, 3), replica_seed(1, 2, 4));
  EXPECT_NE(replica_seed(1, 2, 3), replica_seed(1, 3, 3));
  EXPECT_NE(replica_seed(1, 2, 3), replica_seed(2, 2, 3));
}

TEST(Replicas, ThreadCountDoesNotChangeResults) {
  auto fn = [](int i, std::uint64_t seed) {
    CounterRng rng(seed);
    double s = 0;
    for (int k = 0; k < 1000 + 37 * (i % 5); ++k) s += rng.uniform();
    return std::vector<double>{s, static_cast<double>(i)};
  };
  ReplicaOptions one{1, 9, ""}, many{8, 9, ""};
  const auto a = run_replicas(200, 42, 2, fn, one);
  const auto b = run_replicas(200, 42, 2, fn, many);
  ASSERT_EQ(a.rows.size(), 200u);
  for (int i = 0; i < 200; ++i) {
    EXPECT_EQ(a.rows[i], b.rows[i]);
    EXPECT_EQ(a.rows[i][1], i);
  }
  ReplicaOptions other_tag{1, 10, ""};
  EXPECT_NE(run_replicas(200, 42, 2, fn, other_tag).rows[0], a.rows[0]);
}

TEST(Replicas, FailedReplicaIsExcluded) {
  auto fn = [](int i, std::uint64_t) -> std::vector<double> {
    if (i == 3) throw NumericalError("boom");
    if (i == 5) return {1.0, 2.0};  // wrong width
    return {static_cast<double>(i)};
  };
  const auto r = run_replicas(10, 1, 1, fn, ReplicaOptions{2, 0, ""});
  EXPECT_EQ(r.effective(), 8);
  EXPECT_EQ(r.failed, (std::vector<int>{3, 5}));
  EXPECT_EQ(r.errors[0], "boom");
  EXPECT_EQ(r.column(0), (std::vector<double>{0, 1, 2, 4, 6, 7, 8, 9}));
}

TEST(Replicas, CheckpointResume) {
  const std::string path = temp_path("ckpt.txt");
  std::remove(path.c_str());
  int calls = 0;
  auto fn = [&calls](int i, std::uint64_t seed) {
    ++calls;
    if (i == 7) throw NumericalError("bad");
    CounterRng rng(seed);
    return std::vector<double>{rng.uniform() / 3.0, static_cast<double>(i)};
  };
  ReplicaOptions opt{1, 4, path};
  const auto first = run_replicas(20, 5, 2, fn, opt);
  EXPECT_EQ(calls, 20);
  EXPECT_EQ(first.resumed, 0);

  // Keep the first 12 rows plus a torn line, then resume.
  std::vector<std::string> lines;
  {
    std::ifstream in(path);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  ASSERT_EQ(lines.size(), 20u);
  {
    std::ofstream out(path, std::ios::trunc);
    for (int i = 0; i < 12; ++i) out << lines[i] << '\n';
    out << "13 ";
  }
  calls = 0;
  const auto second = run_replicas(20, 5, 2, fn, opt);
  EXPECT_EQ(second.resumed, 12);
  EXPECT_EQ(calls, 8);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(first.ok[i], second.ok[i]);
    if (first.ok[i]) EXPECT_EQ(first.rows[i], second.rows[i]) << i;  // bit-exact through the hex format
  }
  EXPECT_EQ(second.failed, std::vector<int>{7});

  // A different master seed must not reuse the rows.
  calls = 0;
  run_replicas(20, 6, 2, fn, opt);
  EXPECT_EQ(calls, 20);
  std::remove(path.c_str());
}

TEST(Replicas, ThreadResolution) {
  EXPECT_EQ(resolve_threads(3), 3);
  ::setenv("POLYMER_LIMITS_THREADS", "5", 1);
  EXPECT_EQ(resolve_threads(0), 5);
  ::unsetenv("POLYMER_LIMITS_THREADS");
  EXPECT_GE(resolve_threads(0), 1);
}

// ------------------------------------------------------- walk variance

TEST(WalkVariance, QuadratureMatchesLatticeSum) {
  EnvParams p;
  p.hurst = 0.75;
  p.cutoff = 2000;
  p.delta = calibrate_delta(p.hurst);
  for (int n : {1, 16, 256, 1500}) {
    const auto g = make_covariance_model(p, 2 * n + 2);
    const double lat = walk_variance_lattice(n, g);
    EXPECT_NEAR(walk_variance_quadrature(n, p) / lat, 1.0, 1e-6) << n;
  }
  const std::vector<int> ns{16, 256};
  const auto batch = walk_variance_quadrature(ns, p);
  EXPECT_NEAR(batch[0], walk_variance_quadrature(16, p), 1e-9 * batch[0]);
  EXPECT_NEAR(batch[1], walk_variance_quadrature(256, p), 1e-9 * batch[1]);
}

TEST(WalkVariance, LatticeSumByDirectDefinition) {
  const auto p = EnvParams::white(1.0);
  const auto g = make_covariance_model(p, 100);
  // White noise: sum_{i<=n} p(2i, 0).
  double s = 0;
  for (int i = 1; i <= 20; ++i) s += walk_p(2 * i, 0);
  EXPECT_NEAR(walk_variance_lattice(20, g), s * g(0), 1e-13);
}

TEST(WalkVariance, SigmaSquaredClosedForms) {
  const double D = spectral_constant_D(0.75);
  const double stated = 4.0 * boost::math::tgamma(1.0 - 0.375) / (D * 0.75);
  EXPECT_NEAR(variance_sigma2_stated(0.75, 1.0), stated, 1e-12);
  EXPECT_NEAR(variance_sigma2_stated(0.75, 1.0), 3.05, 0.01);
  EXPECT_NEAR(variance_sigma2_stated(0.75, 2.0), 4.0 * stated, 1e-11);
  const double lam = 0.75 * 0.5;
  EXPECT_NEAR(variance_sigma2_limit(0.75, lam, 1.0), lam * boost::math::tgamma(0.25) / (D * 0.75), 1e-12);
}

TEST(WalkVariance, GrowsLikeNToTheH) {
  EnvParams p;
  p.hurst = 0.75;
  p.cutoff = 100000;
  p.delta = calibrate_delta(p.hurst);
  const double lam = tail_constant(p);
  const double lim = variance_sigma2_limit(p.hurst, lam, 1.0);
  const auto v = walk_variance_quadrature(std::vector<int>{1 << 10, 1 << 14}, p);
  const double e10 = std::abs(v[0] / std::pow(1024.0, 0.75) / lim - 1.0);
  const double e14 = std::abs(v[1] / std::pow(16384.0, 0.75) / lim - 1.0);
  EXPECT_LT(e14, e10);
  EXPECT_LT(e14, 0.1);
}

// ------------------------------------------------------- row functionals

namespace {

void check_row_functional(const EnvParams& p, int len, std::uint64_t seed) {
  const auto kern = make_kernel(p);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> N(0, 1);
  const std::vector<int> lo{-len / 2, 3};
  std::vector<std::vector<double>> w(2, std::vector<double>(len));
  for (auto& row : w)
    for (auto& v : row) v = N(gen);
  const auto funcs = make_row_functionals(kern, lo, w);
  for (int r = 0; r < 2; ++r) {
    const int i = 2 + r;
    const auto env = sample_environment(p, i, lo[r], lo[r] + len - 1, seed, {ConvolutionMethod::Direct});
    KahanSum direct;
    for (int x = 0; x < len; ++x) direct.add(w[r][x] * env(i, lo[r] + x));
    std::vector<double> xi(funcs[r].b.size());
    draw_innovations(p.xi, stream_key(seed, static_cast<std::uint64_t>(i)), xi);
    KahanSum fast;
    for (std::size_t u = 0; u < xi.size(); ++u) fast.add(funcs[r].b[u] * xi[u]);
    EXPECT_NEAR(fast.value(), direct.value(), 1e-9 * (1.0 + std::abs(direct.value()))) << r;
    EXPECT_EQ(funcs[r].x_lo, lo[r]);
  }
}

}  // namespace

TEST(RowFunctional, DirectPathMatchesWeightedSum) {
  EnvParams p;
  p.cutoff = 40;
  p.delta = calibrate_delta(p.hurst);
  check_row_functional(p, 25, 17);
}

TEST(RowFunctional, FftPathMatchesWeightedSum) {
  EnvParams p;
  p.cutoff = 5000;
  p.delta = calibrate_delta(p.hurst);
  check_row_functional(p, 30, 18);
}

TEST(RowFunctional, RademacherInnovations) {
  EnvParams p;
  p.cutoff = 60;
  p.xi = XiDist::Rademacher;
  p.delta = calibrate_delta(p.hurst);
  check_row_functional(p, 40, 19);
}

TEST(RowFunctional, MismatchedInputsThrow) {
  const auto kern = make_kernel(EnvParams::white());
  const std::vector<int> lo{0, 1};
  EXPECT_THROW(make_row_functionals(kern, lo, {{1.0}}), ArgumentError);
}

// ------------------------------------------------------------ configuration

TEST(ExperimentConfig, ValidationAndDefaults) {
  for (const auto& name : experiment_names()) {
    const auto c = default_config(name);
    EXPECT_EQ(c.experiment, name);
    EXPECT_NO_THROW(c.validate()) << name;
  }
  auto c = default_config("clt");
  c.env.hurst = 0.3;
  try {
    c.validate();
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("(1/2,1)"), std::string::npos) << e.what();
  }
  c = default_config("clt");
  c.beta = -1.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = default_config("clt");
  c.replicas = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(ExperimentConfig, DeltaFollowsCalibrationUnlessFixed) {
  auto c = default_config("clt");
  c.env.hurst = 0.8;
  c.delta_fixed = false;
  EXPECT_NEAR(c.env_params().delta, calibrate_delta(0.8), 1e-12);
  c.delta_fixed = true;
  c.env.delta = 0.5;
  EXPECT_EQ(c.env_params().delta, 0.5);
}
