#include "polymer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "polymer/errors.hpp"

namespace polymer {

namespace {

// Normalizes the rectangle to unit coefficient so equal supports share one factor.
RectFn unit(const RectFn& f) {
  RectFn u = f;
  u.coeff = 1.0;
  return u;
}

void for_each_subset(int n, int r, const std::function<void(const std::vector<int>&)>& fn);

void subsets_rec(int start, int n, int r, std::vector<int>& cur, const std::function<void(const std::vector<int>&)>& fn) {
  if (static_cast<int>(cur.size()) == r) {
    fn(cur);
    return;
  }
  for (int i = start; i <= n - (r - static_cast<int>(cur.size())); ++i) {
    cur.push_back(i);
    subsets_rec(i + 1, n, r, cur, fn);
    cur.pop_back();
  }
}

void for_each_subset(int n, int r, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> cur;
  subsets_rec(0, n, r, cur, fn);
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

// Permanent of an m x m matrix (row-major) by permutation enumeration.
double permanent(std::vector<double> a, int m) {
  if (m == 0) return 1.0;
  std::vector<int> p(m);
  std::iota(p.begin(), p.end(), 0);
  double s = 0.0;
  do {
    double prod = 1.0;
    for (int i = 0; i < m && prod != 0.0; ++i) prod *= a[i * m + p[i]];
    s += prod;
  } while (std::next_permutation(p.begin(), p.end()));
  return s;
}

}  // namespace

TensorKernel TensorKernel::power(const RectFn& g, int k, double coeff) {
  TensorKernel t(k);
  t.add_term(coeff, {{g, k}});
  return t;
}

TensorKernel TensorKernel::elementary(const std::vector<std::pair<RectFn, int>>& parts, double coeff) {
  int k = 0;
  for (const auto& p : parts) k += p.second;
  TensorKernel t(k);
  t.add_term(coeff, parts);
  return t;
}

int TensorKernel::factor_index(const RectFn& f) {
  const RectFn u = unit(f);
  for (std::size_t i = 0; i < factors_.size(); ++i)
    if (factors_[i] == u) return static_cast<int>(i);
  factors_.push_back(u);
  return static_cast<int>(factors_.size()) - 1;
}

void TensorKernel::merge_term(TensorTerm t) {
  std::sort(t.parts.begin(), t.parts.end());
  // Combine repeated indices.
  std::vector<std::pair<int, int>> merged;
  for (const auto& p : t.parts) {
    if (p.second == 0) continue;
    if (!merged.empty() && merged.back().first == p.first) merged.back().second += p.second;
    else merged.push_back(p);
  }
  t.parts = std::move(merged);
  if (t.order() != order_) throw ArgumentError("tensor term order does not match kernel order");
  for (auto& e : terms_)
    if (e.parts == t.parts) {
      e.coeff += t.coeff;
      return;
    }
  if (t.coeff != 0.0) terms_.push_back(std::move(t));
}

void TensorKernel::add_term(double coeff, const std::vector<std::pair<RectFn, int>>& parts) {
  TensorTerm t;
  t.coeff = coeff;
  for (const auto& [f, m] : parts) {
    if (m < 0) throw ArgumentError("negative multiplicity");
    if (m == 0) continue;
    if (f.is_zero()) return;
    t.coeff *= std::pow(f.coeff, m);
    t.parts.emplace_back(factor_index(f), m);
  }
  merge_term(std::move(t));
}

TensorKernel& TensorKernel::operator+=(const TensorKernel& o) {
  if (o.order_ != order_) throw ArgumentError("cannot add kernels of different order");
  for (const auto& t : o.terms_) {
    TensorTerm c;
    c.coeff = t.coeff;
    for (const auto& [idx, m] : t.parts) c.parts.emplace_back(factor_index(o.factors_[idx]), m);
    merge_term(std::move(c));
  }
  return *this;
}

TensorKernel TensorKernel::scaled(double c) const {
  TensorKernel r = *this;
  for (auto& t : r.terms_) t.coeff *= c;
  return r;
}

std::vector<RectFn> TensorKernel::slots(const TensorTerm& t) const {
  std::vector<RectFn> s;
  for (const auto& [idx, m] : t.parts)
    for (int i = 0; i < m; ++i) s.push_back(factors_[idx]);
  return s;
}

double inner_H(const TensorKernel& f, const TensorKernel& g, double hurst) {
  if (f.order() != g.order()) return 0.0;
  const int k = f.order();
  double total = 0.0;
  for (const auto& a : f.terms()) {
    const auto sa = f.slots(a);
    for (const auto& b : g.terms()) {
      const auto sb = g.slots(b);
      std::vector<double> m(static_cast<std::size_t>(k) * k);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) m[i * k + j] = inner_H(sa[i], sb[j], hurst);
      total += a.coeff * b.coeff * permanent(std::move(m), k) / factorial(k);
    }
  }
  return total;
}

TensorKernel contract(const TensorKernel& f, const TensorKernel& g, int r, double hurst) {
  const int m = f.order(), n = g.order();
  if (r < 0 || r > std::min(m, n)) throw ArgumentError("contraction order r out of range");
  TensorKernel out(m + n - 2 * r);
  const double weight = 1.0 / (binom(m, r) * binom(n, r) * factorial(r));
  for (const auto& a : f.terms()) {
    const auto sa = f.slots(a);
    for (const auto& b : g.terms()) {
      const auto sb = g.slots(b);
      for_each_subset(m, r, [&](const std::vector<int>& S) {
        for_each_subset(n, r, [&](const std::vector<int>& T) {
          std::vector<int> perm(T);
          double pair_sum = 0.0;
          do {
            double prod = 1.0;
            for (int j = 0; j < r && prod != 0.0; ++j) prod *= inner_H(sa[S[j]], sb[perm[j]], hurst);
            pair_sum += prod;
          } while (std::next_permutation(perm.begin(), perm.end()));
          if (pair_sum == 0.0) return;
          std::vector<std::pair<RectFn, int>> rest;
          for (int i = 0; i < m; ++i)
            if (std::find(S.begin(), S.end(), i) == S.end()) rest.emplace_back(sa[i], 1);
          for (int i = 0; i < n; ++i)
            if (std::find(T.begin(), T.end(), i) == T.end()) rest.emplace_back(sb[i], 1);
          out.add_term(a.coeff * b.coeff * weight * pair_sum, rest);
        });
      });
    }
  }
  return out;
}

}  // namespace polymer
