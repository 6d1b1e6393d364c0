#include "polymer/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "polymer/errors.hpp"
#include "polymer/numeric.hpp"

namespace polymer::stats {

double normal_cdf(double x, double mean, double sd) {
  if (!(sd > 0.0)) throw DomainError("normal_cdf needs sd > 0");
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

double kolmogorov_q(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 1.18) {
    // Jacobi theta form converges fast for small t.
    const double w = std::numbers::pi * std::numbers::pi / (8.0 * t * t);
    double s = 0.0;
    for (int j = 1; j <= 7; j += 2) s += std::exp(-j * j * w);
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / t * s;
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * t * t);
    s += (j % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

double kolmogorov_cdf_exact(int n, double d) {
  if (n < 1) throw DomainError("KS sample size must be >= 1");
  if (d <= 0.5 / n) return 0.0;
  if (d >= 1.0) return 1.0;
  const double s2 = d * d * n;
  // Far tail: the published two-term approximation is accurate to 7 digits there.
  if (s2 > 7.24 || (s2 > 3.76 && n > 99))
    return 1.0 - 2.0 * std::exp(-(2.000071 + 0.331 / std::sqrt(n) + 1.409 / n) * s2);
  const double nd = n * d;
  const int k = static_cast<int>(nd) + 1;
  const int m = 2 * k - 1;
  const double h = k - nd;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i - j + 1 >= 0) H(i, j) = 1.0;
  for (int i = 0; i < m; ++i) {
    H(i, 0) -= std::pow(h, i + 1);
    H(m - 1, i) -= std::pow(h, m - i);
  }
  H(m - 1, 0) += (2.0 * h - 1.0 > 0.0) ? std::pow(2.0 * h - 1.0, m) : 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i - j + 1 > 0)
        for (int g = 1; g <= i - j + 1; ++g) H(i, j) /= g;
  // Power by squaring with a separate base-1e140 exponent to avoid overflow.
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(m, m), base = H;
  int e_result = 0, e_base = 0;
  for (int p = n; p > 0; p >>= 1) {
    if (p & 1) {
      result = result * base;
      e_result += e_base;
      if (result(k - 1, k - 1) > 1e140) {
        result *= 1e-140;
        e_result += 1;
      }
    }
    if (p > 1) {
      base = base * base;
      e_base *= 2;
      if (base(k - 1, k - 1) > 1e140) {
        base *= 1e-140;
        e_base += 1;
      }
    }
  }
  double s = result(k - 1, k - 1);
  for (int i = 1; i <= n; ++i) {
    s *= static_cast<double>(i) / n;
    if (s < 1e-140) {
      s *= 1e140;
      e_result -= 1;
    }
  }
  return std::clamp(s * std::pow(1e140, e_result), 0.0, 1.0);
}

KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw ArgumentError("KS test needs a non-empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  KsResult r;
  r.statistic = d;
  r.n = x.size();
  if (x.size() <= 100000 && n * d < 200.0) {
    r.p_value = std::clamp(1.0 - kolmogorov_cdf_exact(static_cast<int>(x.size()), d), 0.0, 1.0);
  } else {
    const double sn = std::sqrt(n);
    r.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
  }
  return r;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("two-sample KS needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  KsResult r;
  r.statistic = d;
  r.n = a.size();
  r.m = b.size();
  const double ne = std::sqrt(na * nb / (na + nb));
  r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

Summary summarize(std::span<const double> x) {
  Summary s;
  s.n = x.size();
  if (x.empty()) return s;
  s.mean = pairwise_sum(x) / static_cast<double>(x.size());
  if (x.size() < 2) return s;
  std::vector<double> d2(x.size()), d4(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - s.mean;
    d2[i] = d * d;
    d4[i] = d2[i] * d2[i];
  }
  const double n = static_cast<double>(x.size());
  const double m2 = pairwise_sum(d2) / n;
  const double m4 = pairwise_sum(d4) / n;
  s.variance = m2 * n / (n - 1.0);
  s.se = std::sqrt(s.variance / n);
  s.var_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  return s;
}

MomentEstimate raw_moment(std::span<const double> x, int p) {
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = std::pow(x[i], p);
  const auto s = summarize(v);
  return {s.mean, s.se};
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw ArgumentError("quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double h = (x.size() - 1) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - lo) * (x[hi] - x[lo]);
}

double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ArgumentError("correlation needs equal sizes >= 2");
  const auto sa = summarize(a), sb = summarize(b);
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = (a[i] - sa.mean) * (b[i] - sb.mean);
  const double cov = pairwise_sum(prod) / (a.size() - 1.0);
  return cov / std::sqrt(sa.variance * sb.variance);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("line fit needs >= 2 points");
  const std::size_t n = x.size();
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    A(i, 0) = x[i];
    A(i, 1) = 1.0;
    b(i) = y[i];
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
  LineFit f{c(0), c(1), 0.0};
  if (n > 2) {
    const double rss = (A * c - b).squaredNorm();
    const Eigen::Matrix2d cov = (A.transpose() * A).inverse() * (rss / (n - 2.0));
    f.slope_se = std::sqrt(std::max(0.0, cov(0, 0)));
  }
  return f;
}

}  // namespace polymer::stats
