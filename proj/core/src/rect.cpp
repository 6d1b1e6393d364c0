#include "polymer/rect.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "polymer/errors.hpp"

namespace polymer {

double kernel_K(double u, double v, double hurst) {
  if (u == v) throw SingularityError("kernel K is singular on the diagonal u = v");
  return hurst * (2.0 * hurst - 1.0) * std::pow(std::abs(u - v), 2.0 * hurst - 2.0);
}

double fbm_increment_cov(double a, double b, double c, double d, double hurst) {
  const double h2 = 2.0 * hurst;
  auto p = [h2](double z) { return std::pow(std::abs(z), h2); };
  return 0.5 * (p(b - c) + p(a - d) - p(b - d) - p(a - c));
}

namespace {
double time_overlap(const RectFn& f, const RectFn& g) {
  return std::max(0.0, std::min(f.t_hi, g.t_hi) - std::max(f.t_lo, g.t_lo));
}
}  // namespace

double inner_H(const RectFn& f, const RectFn& g, double hurst) {
  if (f.is_zero() || g.is_zero()) return 0.0;
  const double dt = time_overlap(f, g);
  if (dt == 0.0) return 0.0;
  return f.coeff * g.coeff * dt * fbm_increment_cov(f.x_lo, f.x_hi, g.x_lo, g.x_hi, hurst);
}

double inner_H_quadrature(const RectFn& f, const RectFn& g, double hurst) {
  if (f.is_zero() || g.is_zero()) return 0.0;
  const double dt = time_overlap(f, g);
  if (dt == 0.0) return 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  // Inner integral over v in [c,d] split at u so the singularity sits at an endpoint.
  auto inner = [&](double u) {
    double acc = 0.0;
    auto k = [&](double v) { return v == u ? 0.0 : kernel_K(u, v, hurst); };
    const double c = g.x_lo, d = g.x_hi;
    if (u > c && u < d) {
      acc += ts.integrate(k, c, u);
      acc += ts.integrate(k, u, d);
    } else {
      acc += ts.integrate(k, c, d);
    }
    return acc;
  };
  double total = 0.0;
  std::vector<double> cuts = {f.x_lo, f.x_hi};
  for (double z : {g.x_lo, g.x_hi})
    if (z > f.x_lo && z < f.x_hi) cuts.push_back(z);
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += ts.integrate(inner, cuts[i], cuts[i + 1]);
  return f.coeff * g.coeff * dt * total;
}

double norm_H2(const std::vector<RectFn>& fs, double hurst) {
  double s = 0.0;
  for (const auto& a : fs)
    for (const auto& b : fs) s += inner_H(a, b, hurst);
  return s;
}

double hardy_littlewood_rhs(const std::vector<RectFn>& fs, double hurst) {
  std::set<double> tc, xc;
  for (const auto& f : fs) {
    if (f.is_zero()) continue;
    tc.insert(f.t_lo);
    tc.insert(f.t_hi);
    xc.insert(f.x_lo);
    xc.insert(f.x_hi);
  }
  const std::vector<double> ts(tc.begin(), tc.end()), xs(xc.begin(), xc.end());
  double total = 0.0;
  for (std::size_t a = 0; a + 1 < ts.size(); ++a) {
    const double tm = 0.5 * (ts[a] + ts[a + 1]);
    double inner = 0.0;
    for (std::size_t b = 0; b + 1 < xs.size(); ++b) {
      const double xm = 0.5 * (xs[b] + xs[b + 1]);
      double v = 0.0;
      for (const auto& f : fs)
        if (!f.is_zero() && tm > f.t_lo && tm < f.t_hi && xm > f.x_lo && xm < f.x_hi) v += f.coeff;
      inner += std::pow(std::abs(v), 1.0 / hurst) * (xs[b + 1] - xs[b]);
    }
    total += std::pow(inner, 2.0 * hurst) * (ts[a + 1] - ts[a]);
  }
  return total;
}

double hermite(int n, double x) {
  if (n < 0) throw ArgumentError("Hermite degree must be >= 0");
  if (n == 0) return 1.0;
  double h0 = 1.0, h1 = x;
  for (int k = 1; k < n; ++k) {
    const double h2 = x * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

std::vector<double> hermite_all(int n, double x) {
  std::vector<double> h(static_cast<std::size_t>(std::max(n, 0)) + 1);
  h[0] = 1.0;
  if (n >= 1) h[1] = x;
  for (int k = 1; k < n; ++k) h[k + 1] = x * h[k] - k * h[k - 1];
  return h;
}

}  // namespace polymer
