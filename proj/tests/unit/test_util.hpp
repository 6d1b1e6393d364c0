#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace testutil {

// Plain two-pass moments, kept separate from the library's own summaries.
struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double se = 0.0;
  double var_se = 0.0;
};

inline Moments moments(const std::vector<double>& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  long double s = 0;
  for (double v : x) s += v;
  m.mean = static_cast<double>(s / n);
  long double s2 = 0, s4 = 0;
  for (double v : x) {
    const long double d = v - m.mean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  m.var = static_cast<double>(s2 / (n - 1));
  m.se = std::sqrt(m.var / n);
  const double mu4 = static_cast<double>(s4 / n);
  m.var_se = std::sqrt(std::max(0.0, (mu4 - m.var * m.var * (n - 3) / (n - 1)) / n));
  return m;
}

inline double covariance(const std::vector<double>& a, const std::vector<double>& b, double* se = nullptr) {
  std::vector<double> prod(a.size());
  const auto ma = moments(a), mb = moments(b);
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = (a[i] - ma.mean) * (b[i] - mb.mean);
  const auto mp = moments(prod);
  if (se) *se = mp.se;
  return mp.mean;
}

}  // namespace testutil
