#pragma once

#include <functional>
#include <span>
#include <vector>

namespace polymer::stats {

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

/// Limiting Kolmogorov survival function Q(t) = P(sup|B| > t).
double kolmogorov_q(double t);

/// P(D_n < d) for the one-sample statistic, Marsaglia-Tsang-Wang matrix power.
double kolmogorov_cdf_exact(int n, double d);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t m = 0;
};

/// Exact distribution for n*d small enough, otherwise the limiting series
/// with Stephens' finite-n correction.
KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
/// Limiting distribution at the effective size nm/(n+m), with Stephens' correction.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double se = 0.0;        ///< of the mean
  double var_se = 0.0;    ///< of the sample variance, from the 4th central moment
};

/// Order-dependent only through the order of x (pairwise summation).
Summary summarize(std::span<const double> x);

/// Mean of x^p and its standard error.
struct MomentEstimate {
  double value = 0.0;
  double se = 0.0;
};
MomentEstimate raw_moment(std::span<const double> x, int p);

/// Type-7 quantile of an unsorted sample.
double quantile(std::vector<double> x, double q);

double correlation(std::span<const double> a, std::span<const double> b);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace polymer::stats
