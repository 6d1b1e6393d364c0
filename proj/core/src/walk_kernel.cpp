#include "polymer/walk_kernel.hpp"

#include <boost/math/distributions/binomial.hpp>

#include <cmath>
#include <stdexcept>

#include "polymer/errors.hpp"

namespace polymer {

namespace {
constexpr int kRatioPathMaxN = 1024;
}

double walk_p_ratio(int n, int x) {
  if (n < 0 || std::abs(x) > n || !same_parity(n, x)) return 0.0;
  const int k = (n + x) / 2;
  const int m = std::min(k, n - k);
  double r = 1.0;
  int halvings = n;
  for (int j = 1; j <= m; ++j) {
    r *= static_cast<double>(n - m + j) / j;
    while (r > 1.0 && halvings > 0) {
      r *= 0.5;
      --halvings;
    }
  }
  return std::ldexp(r, -halvings);
}

double walk_p_logspace(int n, int x) {
  if (n < 0 || std::abs(x) > n || !same_parity(n, x)) return 0.0;
  if (n == 0) return 1.0;
  const boost::math::binomial_distribution<double> b(n, 0.5);
  return boost::math::pdf(b, (n + x) / 2);
}

double walk_p(int n, int x) { return n <= kRatioPathMaxN ? walk_p_ratio(n, x) : walk_p_logspace(n, x); }

std::vector<double> walk_row(int n) {
  if (n < 0) throw ArgumentError("walk_row: n must be >= 0");
  std::vector<double> row(2 * static_cast<std::size_t>(n) + 1, 0.0);
  // outward from the mode with p(n, x+2) / p(n, x) = (n - x) / (n + x + 2)
  const int c = n % 2;
  row[c + n] = walk_p(n, c);
  for (int x = c; x + 2 <= n; x += 2) {
    const double next = row[x + n] * (n - x) / (n + x + 2);
    row[x + 2 + n] = next;
    row[n - x - 2] = next;
  }
  if (c == 1) row[n - 1] = row[n + 1];
  return row;
}

bool valid_time_tuple(std::span<const int> times, int n, TupleKind kind) {
  for (std::size_t a = 0; a < times.size(); ++a) {
    if (times[a] < 1 || times[a] > n) return false;
    if (kind == TupleKind::Ordered) {
      if (a > 0 && times[a] <= times[a - 1]) return false;
    } else {
      for (std::size_t b = 0; b < a; ++b)
        if (times[a] == times[b]) return false;
    }
  }
  return true;
}

double walk_pk(std::span<const int> times, std::span<const int> sites) {
  if (times.size() != sites.size()) throw ArgumentError("walk_pk: times and sites differ in length");
  double v = 1.0;
  int ti = 0, xi = 0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const int dt = times[j] - ti;
    if (dt < 0) return 0.0;
    v *= walk_p(dt, sites[j] - xi);
    if (v == 0.0) return 0.0;
    ti = times[j];
    xi = sites[j];
  }
  return v;
}

int nearest_parity_int(double x, int i) {
  const double fl = std::floor(x);
  long lo = static_cast<long>(fl);
  if (!same_parity(lo, i)) --lo;
  return static_cast<int>(x - static_cast<double>(lo) <= 1.0 ? lo : lo + 2);
}

double pbar_cell(std::span<const int> times, std::span<const int> sites) {
  return std::ldexp(walk_pk(times, sites), -static_cast<int>(times.size()));
}

double pbar_k(std::span<const int> times, std::span<const double> x) {
  if (times.size() != x.size()) throw ArgumentError("pbar_k: times and points differ in length");
  std::vector<int> sites(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) sites[j] = nearest_parity_int(x[j], times[j]);
  return pbar_cell(times, sites);
}

double p_scaled(std::span<const double> t, std::span<const double> x, int n) {
  if (t.size() != x.size()) throw ArgumentError("p_scaled: t and x differ in length");
  std::vector<int> times(t.size());
  std::vector<double> xs(x.size());
  const double rn = std::sqrt(static_cast<double>(n));
  for (std::size_t j = 0; j < t.size(); ++j) {
    times[j] = static_cast<int>(std::floor(n * t[j]));
    xs[j] = rn * x[j];
  }
  if (!valid_time_tuple(times, n, TupleKind::Ordered)) return 0.0;
  return pbar_k(times, xs);
}

}  // namespace polymer
