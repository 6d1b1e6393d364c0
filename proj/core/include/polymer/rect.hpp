#pragma once

#include <vector>

namespace polymer {

/// coeff * 1_{[t_lo,t_hi] x [x_lo,x_hi]}.
struct RectFn {
  double coeff = 1.0;
  double t_lo = 0.0, t_hi = 1.0;
  double x_lo = 0.0, x_hi = 1.0;

  bool is_zero() const noexcept { return coeff == 0.0 || !(t_hi > t_lo) || !(x_hi > x_lo); }
  bool same_support(const RectFn& o) const noexcept {
    return t_lo == o.t_lo && t_hi == o.t_hi && x_lo == o.x_lo && x_hi == o.x_hi;
  }
  RectFn scaled(double c) const noexcept {
    RectFn r = *this;
    r.coeff *= c;
    return r;
  }
  friend bool operator==(const RectFn&, const RectFn&) = default;
};

/// H(2H-1)|u-v|^{2H-2}; throws SingularityError on the diagonal.
double kernel_K(double u, double v, double hurst);

/// Covariance of fBm increments over [a,b] and [c,d].
double fbm_increment_cov(double a, double b, double c, double d, double hurst);

double inner_H(const RectFn& f, const RectFn& g, double hurst);
inline double norm_H2(const RectFn& f, double hurst) { return inner_H(f, f, hurst); }

/// Same inner product by adaptive quadrature of the kernel integral; the
/// integrand is never evaluated on the diagonal.
double inner_H_quadrature(const RectFn& f, const RectFn& g, double hurst);

/// Squared H-norm of a finite sum of rectangles.
double norm_H2(const std::vector<RectFn>& fs, double hurst);

/// int_0^1 ( int |f(t,x)|^{1/H} dx )^{2H} dt for a finite sum of rectangles.
double hardy_littlewood_rhs(const std::vector<RectFn>& fs, double hurst);

/// Probabilists' Hermite polynomial by the three-term recurrence.
double hermite(int n, double x);
/// H_0(x) .. H_n(x).
std::vector<double> hermite_all(int n, double x);

}  // namespace polymer
