#include "polymer/ustat.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "polymer/errors.hpp"
#include "polymer/numeric.hpp"
#include "polymer/partition.hpp"
#include "polymer/walk_kernel.hpp"

namespace polymer {

namespace {

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Mixed-radix multi-index helpers for tables indexed by a <= counts.
struct MultiIndex {
  std::vector<int> counts;
  std::vector<std::size_t> stride;
  std::size_t size = 1;
  explicit MultiIndex(std::vector<int> c) : counts(std::move(c)), stride(counts.size()) {
    for (std::size_t j = 0; j < counts.size(); ++j) {
      stride[j] = size;
      size *= static_cast<std::size_t>(counts[j] + 1);
    }
  }
  std::vector<int> decode(std::size_t idx) const {
    std::vector<int> a(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j) {
      a[j] = static_cast<int>(idx % (counts[j] + 1));
      idx /= (counts[j] + 1);
    }
    return a;
  }
  std::size_t encode(const std::vector<int>& a) const {
    std::size_t idx = 0;
    for (std::size_t j = 0; j < a.size(); ++j) idx += stride[j] * a[j];
    return idx;
  }
};

double newton_distinct(const std::vector<std::vector<double>>& q, const std::vector<int>& counts) {
  const MultiIndex mi(counts);
  const std::size_t rows = q.empty() ? 0 : q.front().size();
  const std::size_t s = counts.size();
  // Mixed power sums p_c = sum_i prod_j q_j(i)^{c_j}.
  std::vector<double> p(mi.size, 0.0);
  for (std::size_t idx = 1; idx < mi.size; ++idx) {
    const auto c = mi.decode(idx);
    KahanSum acc;
    for (std::size_t i = 0; i < rows; ++i) {
      double v = 1.0;
      for (std::size_t j = 0; j < s; ++j) v *= std::pow(q[j][i], c[j]);
      acc.add(v);
    }
    p[idx] = acc.value();
  }
  // e[a]: coefficient of u^a in prod_i (1 + sum_j u_j q_j(i)).
  std::vector<double> e(mi.size, 0.0);
  e[0] = 1.0;
  for (std::size_t idx = 1; idx < mi.size; ++idx) {
    const auto a = mi.decode(idx);
    std::size_t js = 0;
    while (a[js] == 0) ++js;
    KahanSum acc;
    // Enumerate c <= a with c_js >= 1.
    std::vector<int> c(s, 0);
    c[js] = 1;
    while (true) {
      int tot = 0;
      double denom = factorial(c[js] - 1);
      for (std::size_t j = 0; j < s; ++j) {
        tot += c[j];
        if (j != js) denom *= factorial(c[j]);
      }
      std::vector<int> rest(a);
      for (std::size_t j = 0; j < s; ++j) rest[j] -= c[j];
      const double sign = (tot - 1) % 2 == 0 ? 1.0 : -1.0;
      acc.add(sign * factorial(tot - 1) / denom * p[mi.encode(c)] * e[mi.encode(rest)]);
      // Next c in mixed radix with c_js in [1, a_js].
      std::size_t j = 0;
      for (; j < s; ++j) {
        const int lo = j == js ? 1 : 0;
        if (c[j] < a[j]) {
          ++c[j];
          break;
        }
        c[j] = lo;
      }
      if (j == s) break;
    }
    e[idx] = acc.value() / a[js];
  }
  return e[mi.size - 1];
}

double dp_distinct(const std::vector<std::vector<double>>& q, const std::vector<int>& counts) {
  const MultiIndex mi(counts);
  const std::size_t rows = q.empty() ? 0 : q.front().size();
  std::vector<double> e(mi.size, 0.0);
  e[0] = 1.0;
  for (std::size_t i = 0; i < rows; ++i) {
    // Descending index order keeps the update in place (each row used once).
    for (std::size_t idx = mi.size; idx-- > 1;) {
      const auto a = mi.decode(idx);
      double add = 0.0;
      for (std::size_t j = 0; j < counts.size(); ++j)
        if (a[j] > 0) add += q[j][i] * e[idx - mi.stride[j]];
      e[idx] += add;
    }
  }
  return e[mi.size - 1];
}

double direct_distinct(const std::vector<std::vector<double>>& q, const std::vector<int>& counts) {
  std::vector<int> types;
  for (std::size_t j = 0; j < counts.size(); ++j)
    for (int m = 0; m < counts[j]; ++m) types.push_back(static_cast<int>(j));
  const int k = static_cast<int>(types.size());
  const int rows = q.empty() ? 0 : static_cast<int>(q.front().size());
  std::vector<int> idx(k, 0);
  KahanSum acc;
  std::function<void(int, double)> rec = [&](int depth, double prod) {
    if (depth == k) {
      acc.add(prod);
      return;
    }
    for (int i = 0; i < rows; ++i) {
      bool used = false;
      for (int d = 0; d < depth; ++d) used = used || idx[d] == i;
      if (used) continue;
      idx[depth] = i;
      rec(depth + 1, prod * q[types[depth]][i]);
    }
  };
  rec(0, 1.0);
  // Ordered tuples overcount each index set by the within-type permutations.
  double perms = 1.0;
  for (int c : counts) perms *= factorial(c);
  return acc.value() / perms;
}

const TensorKernel& tensor_of(const UStatSpec& spec) {
  const auto* t = std::get_if<TensorKernel>(&spec.weight);
  if (!t) throw ArgumentError("weight is not a rectangle tensor");
  return *t;
}

// Direct evaluation of the walk-density U-statistic. The weight vanishes off
// the ordered simplex, so only increasing time tuples are enumerated; each
// factor carries the cell value 2^{-1} p(i_j - i_{j-1}, x_j - x_{j-1}).
double walk_direct(const EnvironmentField& env, int n, int k) {
  KahanSum acc;
  std::function<void(int, int, int, double)> rec = [&](int depth, int t_prev, int x_prev, double prod) {
    if (depth == k) {
      acc.add(prod);
      return;
    }
    for (int t = t_prev + 1; t <= n - (k - depth - 1); ++t) {
      const int dt = t - t_prev;
      for (int x = x_prev - dt; x <= x_prev + dt; x += 2)
        rec(depth + 1, t, x, prod * 0.5 * walk_p(dt, x - x_prev) * env(t, x));
    }
  };
  rec(0, 0, 0, 1.0);
  return std::pow(2.0, k / 2.0) * std::pow(static_cast<double>(n), k / 2.0) * acc.value();
}

// Per-row vectors of cell averages on the parity sites of one rectangle.
struct RowWeights {
  int row_lo, row_hi, site_lo, site_hi;
  std::vector<double> tfrac;  // by row
  std::vector<double> xfrac;  // by site
};

RowWeights row_weights(const RectFn& g, int n) {
  RowWeights w;
  std::tie(w.row_lo, w.row_hi) = rect_row_range(g, n);
  std::tie(w.site_lo, w.site_hi) = rect_site_range(g, n);
  const double rn = std::sqrt(static_cast<double>(n));
  for (int i = w.row_lo; i <= w.row_hi; ++i) w.tfrac.push_back(overlap(i - 1.0, i, n * g.t_lo, n * g.t_hi));
  for (int x = w.site_lo; x <= w.site_hi; ++x)
    w.xfrac.push_back(0.5 * overlap(x - 1.0, x + 1.0, rn * g.x_lo, rn * g.x_hi));
  return w;
}

// C_uv(i) = sum_{x,y <-> i} gbar_u(i,x) gbar_v(i,y) gamma(x - y) for all rows.
std::vector<double> row_cross_cov(const RectFn& gu, const RectFn& gv, int n, const CovarianceModel& gamma) {
  const auto wu = row_weights(gu, n), wv = row_weights(gv, n);
  std::vector<double> c(static_cast<std::size_t>(n), 0.0);
  // The spatial part depends only on row parity.
  double par[2] = {0.0, 0.0};
  for (int parity = 0; parity < 2; ++parity) {
    KahanSum acc;
    for (int x = wu.site_lo; x <= wu.site_hi; ++x) {
      if (!same_parity(x, parity)) continue;
      const double a = wu.xfrac[x - wu.site_lo];
      if (a == 0.0) continue;
      for (int y = wv.site_lo; y <= wv.site_hi; ++y) {
        if (!same_parity(y, parity)) continue;
        const double b = wv.xfrac[y - wv.site_lo];
        if (b != 0.0) acc.add(a * b * gamma(x - y));
      }
    }
    par[parity] = acc.value();
  }
  for (int i = std::max(wu.row_lo, wv.row_lo); i <= std::min(wu.row_hi, wv.row_hi); ++i)
    c[i - 1] = gu.coeff * gv.coeff * wu.tfrac[i - wu.row_lo] * wv.tfrac[i - wv.row_lo] * par[i & 1];
  return c;
}

}  // namespace

void UStatSpec::validate() const {
  if (n < 1) throw DomainError("U-statistic needs n >= 1");
  if (k < 1 || k > n) throw DomainError("U-statistic order k must satisfy 1 <= k <= n");
  if (const auto* t = std::get_if<TensorKernel>(&weight); t && t->order() != k)
    throw ArgumentError("tensor order does not match k");
}

std::pair<int, int> rect_site_range(const RectFn& f, int n) {
  const double rn = std::sqrt(static_cast<double>(n));
  return {static_cast<int>(std::floor(rn * f.x_lo)) - 1, static_cast<int>(std::ceil(rn * f.x_hi)) + 1};
}

std::pair<int, int> rect_row_range(const RectFn& f, int n) {
  const int lo = std::max(1, static_cast<int>(std::floor(n * f.t_lo)));
  const int hi = std::min(n, static_cast<int>(std::ceil(n * f.t_hi)) + 1);
  return {lo, hi};
}

double f_bar(const RectFn& f, int n, int i, int x) {
  if (f.is_zero()) return 0.0;
  const double rn = std::sqrt(static_cast<double>(n));
  const double tf = overlap(i - 1.0, i, n * f.t_lo, n * f.t_hi);
  if (tf == 0.0) return 0.0;
  return f.coeff * tf * 0.5 * overlap(x - 1.0, x + 1.0, rn * f.x_lo, rn * f.x_hi);
}

double f_bar(const TensorKernel& f, int n, std::span<const int> times, std::span<const int> sites) {
  const int k = f.order();
  if (static_cast<int>(times.size()) != k || static_cast<int>(sites.size()) != k)
    throw ArgumentError("cell dimension does not match kernel order");
  double total = 0.0;
  std::vector<int> perm(k);
  for (const auto& term : f.terms()) {
    const auto slots = f.slots(term);
    std::iota(perm.begin(), perm.end(), 0);
    double sym = 0.0;
    do {
      double prod = 1.0;
      for (int j = 0; j < k && prod != 0.0; ++j) prod *= f_bar(slots[perm[j]], n, times[j], sites[j]);
      sym += prod;
    } while (std::next_permutation(perm.begin(), perm.end()));
    total += term.coeff * sym / factorial(k);
  }
  return total;
}

std::vector<double> row_sums(const EnvironmentField& env, const RectFn& g, int n) {
  std::vector<double> q(static_cast<std::size_t>(n), 0.0);
  if (g.is_zero()) return q;
  const auto w = row_weights(g, n);
  if (!env.covers(w.row_hi, w.site_lo, w.site_hi))
    throw ArgumentError("environment does not cover the rectangle support");
  for (int i = w.row_lo; i <= w.row_hi; ++i) {
    const double tf = w.tfrac[i - w.row_lo];
    if (tf == 0.0) continue;
    KahanSum acc;
    const int x0 = same_parity(w.site_lo, i) ? w.site_lo : w.site_lo + 1;
    for (int x = x0; x <= w.site_hi; x += 2) acc.add(w.xfrac[x - w.site_lo] * env(i, x));
    q[i - 1] = g.coeff * tf * acc.value();
  }
  return q;
}

double distinct_product_sum(const std::vector<std::vector<double>>& q, const std::vector<int>& counts,
                            UStatMethod method) {
  if (q.size() != counts.size()) throw ArgumentError("one row-sum vector per factor type required");
  switch (method) {
    case UStatMethod::Direct: return direct_distinct(q, counts);
    case UStatMethod::SymmetricDp: return dp_distinct(q, counts);
    default: return newton_distinct(q, counts);
  }
}

double ustat_from_row_sums(const TensorKernel& f, const std::vector<std::vector<double>>& rows,
                           UStatMethod method) {
  if (rows.size() != f.factors().size()) throw ArgumentError("one row-sum vector per factor required");
  KahanSum total;
  for (const auto& term : f.terms()) {
    std::vector<std::vector<double>> q;
    std::vector<int> counts;
    double mult = 1.0;
    for (const auto& [idx, m] : term.parts) {
      q.push_back(rows[idx]);
      counts.push_back(m);
      mult *= factorial(m);
    }
    const UStatMethod m = method == UStatMethod::Auto ? UStatMethod::Newton : method;
    total.add(term.coeff * mult * distinct_product_sum(q, counts, m));
  }
  return std::pow(2.0, f.order() / 2.0) * total.value();
}

double ustat_eval(const EnvironmentField& env, const UStatSpec& spec, UStatMethod method) {
  spec.validate();
  const int n = spec.n, k = spec.k;
  if (std::holds_alternative<WalkDensityWeight>(spec.weight)) {
    if (method == UStatMethod::Direct) return walk_direct(env, n, k);
    // sum over E_k of the walk weight = sum over D_k, computed by the ordered DP.
    const double d = ordered_walk_sums(env, n, k)[k];
    return std::pow(2.0, k / 2.0) * std::pow(static_cast<double>(n), k / 2.0) * std::pow(0.5, k) * d;
  }
  const auto& f = tensor_of(spec);
  std::vector<std::vector<double>> rows(f.factors().size());
  for (std::size_t j = 0; j < f.factors().size(); ++j) rows[j] = row_sums(env, f.factors()[j], n);
  return ustat_from_row_sums(f, rows, method);
}

double ustat_scaled(const EnvironmentField& env, const UStatSpec& spec, UStatMethod method) {
  const double h = env.params().hurst;
  return ustat_eval(env, spec, method) * std::pow(static_cast<double>(spec.n), -(h + 1.0) * spec.k / 2.0);
}

double ustat_exact_covariance(const UStatSpec& a, const UStatSpec& b, const CovarianceModel& gamma) {
  a.validate();
  b.validate();
  if (a.k != 1 || b.k != 1 || a.n != b.n) throw DomainError("exact covariance implemented for k = 1 pairs");
  const int n = a.n;
  if (std::holds_alternative<WalkDensityWeight>(a.weight) || std::holds_alternative<WalkDensityWeight>(b.weight)) {
    if (!(std::holds_alternative<WalkDensityWeight>(a.weight) && std::holds_alternative<WalkDensityWeight>(b.weight)))
      throw DomainError("mixed walk/rectangle covariance not supported");
    // 2 n sum_i sum_{x,y} pbar pbar gamma = (n/2) sum_i sum_m p(2i, 2m) gamma(2m).
    KahanSum acc;
    for (int i = 1; i <= n; ++i) {
      const int reach = std::min(i, static_cast<int>(20.0 * std::sqrt(2.0 * i)) + 4);
      for (int m = -reach; m <= reach; ++m) acc.add(walk_p(2 * i, 2 * m) * gamma(2 * m));
    }
    return 0.5 * n * acc.value();
  }
  const auto& fa = tensor_of(a);
  const auto& fb = tensor_of(b);
  KahanSum acc;
  for (const auto& ta : fa.terms())
    for (const auto& tb : fb.terms()) {
      const auto c = row_cross_cov(fa.factors()[ta.parts[0].first], fb.factors()[tb.parts[0].first], n, gamma);
      for (double v : c) acc.add(2.0 * ta.coeff * tb.coeff * v);
    }
  return acc.value();
}

double ustat_exact_variance(const UStatSpec& spec, const CovarianceModel& gamma) {
  spec.validate();
  if (spec.k == 1) return ustat_exact_covariance(spec, spec, gamma);
  if (spec.k != 2) throw DomainError("exact variance available for k <= 2 only; use Monte Carlo");
  if (std::holds_alternative<WalkDensityWeight>(spec.weight))
    throw DomainError("exact k = 2 variance implemented for rectangle tensors only");
  const auto& f = tensor_of(spec);
  const int n = spec.n;
  const auto& fac = f.factors();
  // Cache C_uv rows.
  const std::size_t nf = fac.size();
  std::vector<std::vector<double>> C(nf * nf);
  auto cov = [&](int u, int v) -> const std::vector<double>& {
    auto& slot = C[u * nf + v];
    if (slot.empty()) slot = row_cross_cov(fac[u], fac[v], n, gamma);
    return slot;
  };
  auto pair_sum = [&](const std::vector<double>& A, const std::vector<double>& B) {
    KahanSum sa, sb, sab;
    for (int i = 0; i < n; ++i) {
      sa.add(A[i]);
      sb.add(B[i]);
      sab.add(A[i] * B[i]);
    }
    return sa.value() * sb.value() - sab.value();
  };
  auto split = [&](const TensorTerm& t) {
    std::pair<int, int> ab{t.parts[0].first, t.parts[0].first};
    if (t.parts.size() == 2) ab.second = t.parts[1].first;
    return ab;
  };
  KahanSum acc;
  for (const auto& t1 : f.terms())
    for (const auto& t2 : f.terms()) {
      const auto [a, b] = split(t1);
      const auto [c, d] = split(t2);
      // Rows pair up either straight or crossed.
      const double s = pair_sum(cov(a, c), cov(b, d)) + pair_sum(cov(a, d), cov(b, c));
      acc.add(t1.coeff * t2.coeff * s);
    }
  return 4.0 * acc.value();
}

}  // namespace polymer
