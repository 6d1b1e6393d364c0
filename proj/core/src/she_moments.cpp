#include "polymer/she_moments.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/gamma_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "polymer/errors.hpp"
#include "polymer/numeric.hpp"
#include "polymer/rng.hpp"

namespace polymer {

namespace {

// int |d|^p N(d; 0, v) dd
double abs_moment(double p, double v) {
  return std::pow(2.0 * v, p / 2.0) * boost::math::tgamma((p + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
}

void check_args(double t, double s, double hurst) {
  if (!(t > s)) throw DomainError("chaos moments need t > s");
  if (!(hurst > 0.5 && hurst < 1.0)) throw DomainError("Hurst parameter H must lie in (1/2,1)");
}

}  // namespace

double theta_1_exact(double t, double x, double s, double y, double beta, double hurst) {
  check_args(t, s, hurst);
  const double p = 2.0 * hurst - 2.0;
  const double lam = hurst * (2.0 * hurst - 1.0);
  const double P = heat_kernel(t - s, x - y);
  // D_tau ~ N(0, 2(tau-s)(t-tau)/(t-s)); integrate its |.|^p moment over tau.
  const double c = std::pow(2.0, p) * boost::math::tgamma((p + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
  const double time = std::pow(t - s, p / 2.0 + 1.0) * boost::math::beta(p / 2.0 + 1.0, p / 2.0 + 1.0);
  return beta * beta * P * P * lam * c * time;
}

double theta_1_quadrature(double t, double x, double s, double y, double beta, double hurst) {
  check_args(t, s, hurst);
  const double p = 2.0 * hurst - 2.0;
  const double lam = hurst * (2.0 * hurst - 1.0);
  const double P = heat_kernel(t - s, x - y);
  boost::math::quadrature::tanh_sinh<double> ts;
  auto moment = [&](double tau) {
    const double v = 2.0 * (tau - s) * (t - tau) / (t - s);
    if (!(v > 0.0)) return 0.0;
    auto f = [&](double d) {
      if (d == 0.0) return 0.0;
      return std::pow(d, p) * std::exp(-d * d / (2.0 * v)) / std::sqrt(2.0 * std::numbers::pi * v);
    };
    const double sd = std::sqrt(v);
    return 2.0 * (ts.integrate(f, 0.0, sd) + ts.integrate(f, sd, 40.0 * sd));
  };
  const double mid = 0.5 * (s + t);
  const double I = ts.integrate(moment, s, mid) + ts.integrate(moment, mid, t);
  return beta * beta * P * P * lam * I;
}

ChaosMoment theta_k(int k, double t, double x, double s, double y, double beta, double hurst,
                    const ThetaOptions& opt) {
  check_args(t, s, hurst);
  if (k < 0) throw ArgumentError("chaos order must be >= 0");
  if (k > 6 && !opt.force) throw DomainError("theta_k refuses k > 6 (variance blow-up); set force to override");
  const double P = heat_kernel(t - s, x - y);
  ChaosMoment out;
  out.k = k;
  if (k == 0) {
    out.estimate = P * P;
    return out;
  }
  if (opt.n_mc < 2) throw ArgumentError("theta_k needs at least two samples");
  const double p = 2.0 * hurst - 2.0;
  const double lam = hurst * (2.0 * hurst - 1.0);
  const double shape = (p + 1.0) / 2.0;
  double front = std::pow(beta * beta * lam, k) * P * P * std::pow(t - s, k);
  for (int i = 2; i <= k; ++i) front /= i;

  std::vector<double> w(static_cast<std::size_t>(opt.n_mc));
  std::vector<double> times(k);
  for (long m = 0; m < opt.n_mc; ++m) {
    CounterRng rng(stream_key(opt.seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(m)));
    for (int i = 0; i < k; ++i) times[i] = s + (t - s) * rng.uniform();
    std::sort(times.begin(), times.end());
    boost::random::gamma_distribution<double> gam(shape, 2.0);
    double weight = 1.0, prev_t = s, prev_d = 0.0;
    for (int i = 0; i < k; ++i) {
      const double ti = times[i];
      const double span = t - prev_t;
      const double v = 2.0 * (ti - prev_t) * (t - ti) / span;
      const double mean = prev_d * (t - ti) / span;
      if (!(v > 0.0)) {
        weight = 0.0;
        break;
      }
      // Proposal density proportional to |d|^p N(d; 0, v).
      const double mag = std::sqrt(gam(rng) * v);
      const double d = (rng() & 1u) ? mag : -mag;
      weight *= abs_moment(p, v) * std::exp((2.0 * d * mean - mean * mean) / (2.0 * v));
      prev_t = ti;
      prev_d = d;
    }
    w[m] = weight;
  }
  const double mean = pairwise_sum(w) / static_cast<double>(opt.n_mc);
  KahanSum ss;
  for (double v : w) ss.add((v - mean) * (v - mean));
  const double var = ss.value() / static_cast<double>(opt.n_mc - 1);
  out.estimate = front * mean;
  out.se = front * std::sqrt(var / static_cast<double>(opt.n_mc));
  out.samples = opt.n_mc;
  return out;
}

ChaosSum chaos_second_moment(double t, double x, double s, double y, double beta, double hurst, int k_max,
                             const ThetaOptions& opt) {
  if (k_max < 0 || (k_max > 6 && !opt.force)) throw DomainError("chaos_second_moment needs 0 <= k_max <= 6");
  ChaosSum cs;
  double var = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    auto m = (beta == 0.0 && k > 0) ? ChaosMoment{k, 0.0, 0.0, 0} : theta_k(k, t, x, s, y, beta, hurst, opt);
    cs.value += m.estimate;
    var += m.se * m.se;
    if (m.estimate < -2.0 * m.se) cs.partial_sums_ok = false;
    cs.terms.push_back(m);
  }
  cs.se = std::sqrt(var);
  if (k_max >= 2) {
    const double a = cs.terms[k_max - 1].estimate, b = cs.terms[k_max].estimate;
    if (b == 0.0) {
      cs.tail_estimate = 0.0;
    } else {
      const double r = a > 0.0 ? b / a : std::numeric_limits<double>::infinity();
      cs.tail_estimate = r < 1.0 ? b * r / (1.0 - r) : std::numeric_limits<double>::infinity();
    }
  }
  return cs;
}

}  // namespace polymer
