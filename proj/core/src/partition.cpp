#include "polymer/partition.hpp"
#include "polymer/walk_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "polymer/errors.hpp"
#include "polymer/numeric.hpp"

namespace polymer {

namespace {

constexpr double kRescaleHi = 0x1.0p+600;
constexpr double kRescaleLo = 0x1.0p-600;

// Rescales one level if its magnitude left the safe band; returns log factor removed.
double rescale(double* v, int len) {
  double m = 0.0;
  for (int j = 0; j < len; ++j) m = std::max(m, std::abs(v[j]));
  if (m == 0.0 || (m < kRescaleHi && m > kRescaleLo)) return 0.0;
  const double inv = 1.0 / m;
  for (int j = 0; j < len; ++j) v[j] *= inv;
  return std::log(m);
}

void require_window(const EnvironmentField& env, int n, int lo, int hi) {
  if (!env.covers(n, lo, hi)) {
    std::ostringstream os;
    os << "environment window rows 1.." << env.n_time() << " x [" << env.x_lo() << "," << env.x_hi()
       << "] does not cover the cone rows 1.." << n << " x [" << lo << "," << hi << "]";
    throw ArgumentError(os.str());
  }
}

// Forward recursion z(k,x) = w(k,x) * (z(k-1,x-1) + z(k-1,x+1))/2 from a point start.
template <class Weight>
PartitionSurface forward(int m0, int y0, int n, Weight&& weight, double level_log) {
  PartitionSurface s(Endpoint::PointToPoint, m0, y0, n);
  s.level(m0)[0] = 1.0;
  s.set_log_scale(m0, 0.0);
  for (int k = m0 + 1; k <= n; ++k) {
    const double* prev = s.level(k - 1);
    double* cur = s.level(k);
    const int len = s.level_size(k);
    const int lo = s.level_lo(k);
    for (int j = 0; j < len; ++j) {
      const double left = j > 0 ? prev[j - 1] : 0.0;
      const double right = j < len - 1 ? prev[j] : 0.0;
      cur[j] = weight(k, lo + 2 * j) * 0.5 * (left + right);
    }
    s.set_log_scale(k, s.log_scale(k - 1) + level_log + rescale(cur, len));
  }
  return s;
}

// Backward recursion V(k,x) = (w(k+1,x-1) V(k+1,x-1) + w(k+1,x+1) V(k+1,x+1))/2, V(n,.) = 1.
template <class Weight>
PartitionSurface backward(int m0, int y0, int n, Weight&& weight, double level_log) {
  PartitionSurface s(Endpoint::PointToLine, m0, y0, n);
  std::fill_n(s.level(n), s.level_size(n), 1.0);
  s.set_log_scale(n, 0.0);
  std::vector<double> wv;
  for (int k = n - 1; k >= m0; --k) {
    const double* next = s.level(k + 1);
    double* cur = s.level(k);
    const int len = s.level_size(k);
    const int lo_next = s.level_lo(k + 1);
    wv.resize(len + 1);
    for (int j = 0; j <= len; ++j) wv[j] = weight(k + 1, lo_next + 2 * j) * next[j];
    for (int j = 0; j < len; ++j) cur[j] = 0.5 * (wv[j] + wv[j + 1]);
    s.set_log_scale(k, s.log_scale(k + 1) + level_log + rescale(cur, len));
  }
  return s;
}

template <class Weight>
PartitionSurface run(const EnvironmentField& env, const PartitionParams& params, Endpoint endpoint,
                     StartPoint start, Weight&& weight, double level_log) {
  params.validate();
  const int n = params.n;
  if (start.time < 0 || start.time > n) throw ArgumentError("start time outside [0,n]");
  const int reach = n - start.time;
  require_window(env, n, start.site - reach, start.site + reach);
  if (endpoint == Endpoint::PointToPoint) return forward(start.time, start.site, n, weight, level_log);
  return backward(start.time, start.site, n, weight, level_log);
}

}  // namespace

std::string to_string(PartitionVariant v) {
  switch (v) {
    case PartitionVariant::Exponential: return "exponential";
    case PartitionVariant::Modified: return "modified";
    case PartitionVariant::Tilted: return "tilted";
  }
  return "?";
}

std::string to_string(Endpoint e) { return e == Endpoint::PointToLine ? "point-to-line" : "point-to-point"; }

double PartitionParams::step_beta() const { return beta * std::pow(static_cast<double>(n), -rho()); }

void PartitionParams::validate() const {
  if (n < 1) throw DomainError("partition length n must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("beta must be a finite value >= 0");
  if (!(hurst > 0.5 && hurst < 1.0)) throw DomainError("Hurst parameter H must lie in (1/2,1)");
}

PartitionSurface::PartitionSurface(Endpoint e, int start_time, int start_site, int n)
    : endpoint_(e), m0_(start_time), y0_(start_site), n_(n) {
  if (n < start_time) throw ArgumentError("surface end before start");
  const int levels = n - start_time + 1;
  cells_.assign(offset(levels), 0.0);
  log_scale_.assign(static_cast<std::size_t>(levels), 0.0);
}

bool PartitionSurface::in_cone(int k, int x) const noexcept {
  if (k < m0_ || k > n_) return false;
  const int r = k - m0_;
  const int d = x - y0_;
  return d >= -r && d <= r && same_parity(d, r);
}

double PartitionSurface::mantissa(int k, int x) const {
  if (!in_cone(k, x)) return 0.0;
  return level(k)[(x - level_lo(k)) / 2];
}

double PartitionSurface::value(int k, int x) const {
  if (!in_cone(k, x)) return 0.0;
  const double ls = log_scale(k);
  const double m = mantissa(k, x);
  return ls == 0.0 ? m : m * std::exp(ls);
}

double PartitionSurface::endpoint_value(int x) const {
  if (endpoint_ == Endpoint::PointToLine) return value(m0_, y0_);
  return value(n_, x);
}

PartitionSurface dp_modified_partition(const EnvironmentField& env, const PartitionParams& params,
                                       Endpoint endpoint, StartPoint start) {
  const double b = params.step_beta();
  auto w = [&](int k, int x) { return 1.0 + b * env(k, x); };
  auto s = run(env, params, endpoint, start, w, 0.0);
  s.variant = PartitionVariant::Modified;
  s.beta = params.beta;
  s.hurst = params.hurst;
  s.seed = env.seed();
  return s;
}

PartitionSurface dp_exp_partition(const EnvironmentField& env, const PartitionParams& params,
                                  Endpoint endpoint, bool normalized, StartPoint start) {
  const double b = params.step_beta();
  bool large = false;
  auto w = [&](int k, int x) {
    const double e = b * env(k, x);
    if (std::abs(e) > 50.0) large = true;
    return std::exp(e);
  };
  const double lam = normalized ? log_laplace(b, env.params()) : 0.0;
  auto s = run(env, params, endpoint, start, w, -lam);
  s.variant = PartitionVariant::Exponential;
  s.normalization = normalized ? Normalization::ExpNormalized : Normalization::Raw;
  s.beta = params.beta;
  s.hurst = params.hurst;
  s.seed = env.seed();
  if (large) s.warnings.push_back("log weight exceeded 50 in magnitude");
  return s;
}

double log_laplace(double b, const Kernel& kern, XiDist xi) {
  KahanSum s;
  if (xi == XiDist::StandardGaussian) {
    for (double h : kern.h) s.add(h * h);
    return 0.5 * b * b * s.value();
  }
  for (double h : kern.h) {
    const double sh = std::sinh(0.5 * b * h);
    s.add(std::log1p(2.0 * sh * sh));
  }
  return s.value();
}

double log_laplace(double b, const EnvParams& p) { return log_laplace(b, make_kernel(p), p.xi); }

double TiltedField::covariance(int k) const {
  const EnvParams& p = values.params();
  if (p.xi == XiDist::StandardGaussian) {
    const double g = exact_gamma(k, kernel);
    return std::expm1(b * b * g) / (b * b);
  }
  // E e^{b(omega_x + omega_{x+k})} = prod_m cosh(b (psi_m + psi_{m+k})).
  if (k < 0) k = -k;
  const int len = static_cast<int>(kernel.h.size());
  KahanSum s;
  for (int m = -k; m < len; ++m) {
    const double a = (m >= 0 ? kernel.h[m] : 0.0) + (m + k < len ? kernel.h[m + k] : 0.0);
    const double sh = std::sinh(0.5 * b * a);
    s.add(std::log1p(2.0 * sh * sh));
  }
  return std::expm1(s.value() - 2.0 * lambda) / (b * b);
}

TiltedField tilt_environment(const EnvironmentField& env, double beta, int n, int n_coeffs) {
  const EnvParams& p = env.params();
  TiltedField t;
  t.b = beta * std::pow(static_cast<double>(n), -p.hurst / 2.0);
  if (!(t.b > 0.0)) throw DomainError("tilting requires beta > 0");
  t.kernel = make_kernel(p);
  t.lambda = log_laplace(t.b, t.kernel, p.xi);
  t.values = EnvironmentField(p, env.n_time(), env.x_lo(), env.x_hi(), env.seed());
  const auto& src = env.values();
  auto& dst = t.values.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::expm1(t.b * src[i] - t.lambda) / t.b;
  double c = 1.0;
  for (int j = 1; j <= n_coeffs; ++j) {
    t.appell_coeffs.push_back(c);
    c *= t.b / (j + 1);
  }
  return t;
}

PartitionSurface dp_tilted_partition(const TiltedField& tilted, const PartitionParams& params,
                                     Endpoint endpoint, StartPoint start) {
  auto s = dp_modified_partition(tilted.values, params, endpoint, start);
  s.variant = PartitionVariant::Tilted;
  return s;
}

double two_walk_second_moment(int n, double beta, double hurst, const CovarianceModel& gamma,
                              Endpoint mode, int end_site) {
  if (n < 1) throw DomainError("two_walk_second_moment needs n >= 1");
  const double b = beta * std::pow(static_cast<double>(n), -hurst / 2.0);
  const double b2 = b * b;
  if (mode == Endpoint::PointToLine) {
    // Half-difference h = (S - S')/2 moves -1, 0, +1 with probabilities 1/4, 1/2, 1/4.
    std::vector<double> w(2 * static_cast<std::size_t>(n) + 3, 0.0), nw(w.size(), 0.0);
    std::vector<double> g(static_cast<std::size_t>(n) + 1);
    for (int h = 0; h <= n; ++h) g[h] = 1.0 + b2 * gamma(2 * h);
    const int c = n + 1;
    w[c] = 1.0;
    for (int i = 1; i <= n; ++i) {
      for (int h = -i; h <= i; ++h)
        nw[c + h] = (0.25 * (w[c + h - 1] + w[c + h + 1]) + 0.5 * w[c + h]) * g[h < 0 ? -h : h];
      std::swap(w, nw);
    }
    KahanSum s;
    for (double v : w) s.add(v);
    return s.value();
  }
  if (std::abs(end_site) > n || !same_parity(n, end_site)) return 0.0;
  // Joint DP on a = (S + i)/2, a' = (S' + i)/2 in [0, i].
  const std::size_t dim = static_cast<std::size_t>(n) + 1;
  std::vector<double> w(dim * dim, 0.0), t(dim * dim, 0.0);
  std::vector<double> g(2 * dim + 1);
  for (int d = -n; d <= n; ++d) g[d + n] = 1.0 + b2 * gamma(2 * d);
  w[0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    // t(a, a') = w(a, a'-1) + w(a, a'), rows a in [0, i-1], a' in [0, i].
    for (int a = 0; a <= i - 1; ++a) {
      const double* wr = &w[a * dim];
      double* tr = &t[a * dim];
      tr[0] = wr[0];
      for (int ap = 1; ap < i; ++ap) tr[ap] = wr[ap - 1] + wr[ap];
      tr[i] = wr[i - 1];
    }
    for (int a = i; a >= 0; --a) {
      double* wr = &w[a * dim];
      const double* up = a > 0 ? &t[(a - 1) * dim] : nullptr;
      const double* same = a < i ? &t[a * dim] : nullptr;
      const double* gr = &g[n + a];
      for (int ap = 0; ap <= i; ++ap) {
        const double v = (up ? up[ap] : 0.0) + (same ? same[ap] : 0.0);
        wr[ap] = 0.25 * v * gr[-ap];
      }
    }
  }
  const int a = (end_site + n) / 2;
  return w[a * dim + a];
}

std::vector<double> chaos_terms(const EnvironmentField& env, int n, double beta, double hurst, int k_max) {
  auto s = ordered_walk_sums(env, n, k_max);
  const double b = beta * std::pow(static_cast<double>(n), -hurst / 2.0);
  double f = 1.0;
  for (auto& v : s) {
    v *= f;
    f *= b;
  }
  return s;
}

std::vector<double> ordered_walk_sums(const EnvironmentField& env, int n, int k_max) {
  if (k_max < 0) throw ArgumentError("chaos order must be >= 0");
  require_window(env, n, -n, n);
  const double b = 1.0;
  const int kk = std::min(k_max, n);
  const std::size_t width = 2 * static_cast<std::size_t>(n) + 3;
  const int c = n + 1;
  // f[j][c + x]: mass with exactly j environment factors picked so far.
  std::vector<std::vector<double>> f(kk + 1, std::vector<double>(width, 0.0)), g = f;
  f[0][c] = 1.0;
  for (int t = 1; t <= n; ++t) {
    for (int j = 0; j <= kk; ++j) {
      auto& out = g[j];
      std::fill(out.begin(), out.end(), 0.0);
      for (int x = -t; x <= t; x += 2) {
        double v = 0.5 * (f[j][c + x - 1] + f[j][c + x + 1]);
        if (j > 0) v += b * env(t, x) * 0.5 * (f[j - 1][c + x - 1] + f[j - 1][c + x + 1]);
        out[c + x] = v;
      }
    }
    std::swap(f, g);
  }
  std::vector<double> out(static_cast<std::size_t>(k_max) + 1, 0.0);
  for (int j = 0; j <= kk; ++j) {
    KahanSum s;
    for (double v : f[j]) s.add(v);
    out[j] = s.value();
  }
  return out;
}

double chaos_term(const EnvironmentField& env, int n, double beta, double hurst, int k) {
  if (k > n) return 0.0;
  return chaos_terms(env, n, beta, hurst, k).back();
}

}  // namespace polymer
