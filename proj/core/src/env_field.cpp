#include "polymer/env_field.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "polymer/errors.hpp"
#include "polymer/numeric.hpp"
#include "polymer/rng.hpp"

namespace polymer {

namespace {

constexpr std::size_t kDirectWorkLimit = 1 << 15;

void check_hurst(double h) {
  if (!(h > 0.5 && h < 1.0)) {
    std::ostringstream os;
    os << "Hurst parameter H=" << h << " must lie in (1/2,1)";
    throw DomainError(os.str());
  }
}

}  // namespace

void EnvParams::validate() const {
  check_hurst(hurst);
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("kernel amplitude delta must be > 0");
  if (cutoff < 1) throw DomainError("kernel cutoff M must be >= 1");
  if (!(lambda_target > 0.0)) throw DomainError("lambda_target must be > 0");
}

EnvParams EnvParams::calibrated(double hurst, int cutoff, XiDist xi, KernelShape shape,
                                std::optional<double> lambda_target) {
  check_hurst(hurst);
  EnvParams p;
  p.hurst = hurst;
  p.cutoff = cutoff;
  p.xi = xi;
  p.shape = shape;
  p.lambda_target = lambda_target.value_or(hurst * (2.0 * hurst - 1.0));
  p.delta = calibrate_delta(hurst, shape, p.lambda_target);
  p.validate();
  return p;
}

EnvParams EnvParams::white(double delta, XiDist xi) {
  EnvParams p;
  p.delta = delta;
  p.cutoff = 1;
  p.xi = xi;
  p.shape = KernelShape::Point;
  return p;
}

std::string to_string(XiDist d) { return d == XiDist::StandardGaussian ? "gaussian" : "rademacher"; }

std::string to_string(KernelShape s) {
  switch (s) {
    case KernelShape::OneSided: return "one-sided";
    case KernelShape::Symmetric: return "symmetric";
    case KernelShape::Point: return "point";
  }
  return "?";
}

std::string to_string(Psi0Rule r) { return r == Psi0Rule::Unit ? "unit" : "zeta"; }

XiDist parse_xi_dist(const std::string& s) {
  if (s == "gaussian" || s == "StandardGaussian") return XiDist::StandardGaussian;
  if (s == "rademacher" || s == "Rademacher") return XiDist::Rademacher;
  throw DomainError("unknown xi distribution '" + s + "' (expected gaussian|rademacher)");
}

KernelShape parse_kernel_shape(const std::string& s) {
  if (s == "one-sided" || s == "onesided") return KernelShape::OneSided;
  if (s == "symmetric") return KernelShape::Symmetric;
  if (s == "point" || s == "iid") return KernelShape::Point;
  throw DomainError("unknown kernel shape '" + s + "' (expected one-sided|symmetric|point)");
}

Psi0Rule parse_psi0_rule(const std::string& s) {
  if (s == "unit") return Psi0Rule::Unit;
  if (s == "zeta") return Psi0Rule::ZetaCorrected;
  throw DomainError("unknown psi0 rule '" + s + "' (expected unit|zeta)");
}

double psi_coeff(int j, const EnvParams& p) {
  switch (p.shape) {
    case KernelShape::Point:
      return j == 0 ? p.delta : 0.0;
    case KernelShape::OneSided:
      if (j < 0) return 0.0;
      break;
    case KernelShape::Symmetric:
      break;
  }
  const int a = j < 0 ? -j : j;
  if (a > p.cutoff) return 0.0;
  if (a == 0) {
    if (p.psi0 == Psi0Rule::Unit) return p.delta;
    const double sides = p.shape == KernelShape::Symmetric ? 2.0 : 1.0;
    return -sides * boost::math::zeta(p.alpha()) * p.delta;
  }
  return p.delta * std::pow(static_cast<double>(a), -p.alpha());
}

Kernel make_kernel(const EnvParams& p) {
  Kernel k;
  switch (p.shape) {
    case KernelShape::Point:
      k.j_lo = 0;
      k.h = {p.delta};
      return k;
    case KernelShape::OneSided:
      k.j_lo = 0;
      break;
    case KernelShape::Symmetric:
      k.j_lo = -p.cutoff;
      break;
  }
  const int j_hi = p.cutoff;
  k.h.resize(static_cast<std::size_t>(j_hi - k.j_lo + 1));
  const double a = p.alpha();
  for (int j = k.j_lo; j <= j_hi; ++j) {
    const int m = j < 0 ? -j : j;
    k.h[j - k.j_lo] = m == 0 ? psi_coeff(0, p) : p.delta * std::pow(static_cast<double>(m), -a);
  }
  return k;
}

double tail_constant(const EnvParams& p) {
  using boost::math::beta;
  const double a = p.alpha();
  const double d2 = p.delta * p.delta;
  switch (p.shape) {
    case KernelShape::Point: return 0.0;
    case KernelShape::OneSided: return d2 * beta(1.0 - a, 2.0 * a - 1.0);
    case KernelShape::Symmetric: return d2 * (2.0 * beta(1.0 - a, 2.0 * a - 1.0) + beta(1.0 - a, 1.0 - a));
  }
  return 0.0;
}

double calibrate_delta(double hurst) {
  return calibrate_delta(hurst, KernelShape::OneSided, hurst * (2.0 * hurst - 1.0));
}

double calibrate_delta(double hurst, KernelShape shape, double lambda_target) {
  check_hurst(hurst);
  if (shape == KernelShape::Point) throw DomainError("the point kernel has no tail constant to calibrate");
  EnvParams unit;
  unit.hurst = hurst;
  unit.delta = 1.0;
  unit.shape = shape;
  return std::sqrt(lambda_target / tail_constant(unit));
}

double exact_gamma(int k, const Kernel& kern) {
  if (k < 0) k = -k;
  const int len = static_cast<int>(kern.h.size());
  if (k >= len) return 0.0;
  KahanSum s;
  for (int t = 0; t + k < len; ++t) s.add(kern.h[t] * kern.h[t + k]);
  return s.value();
}

double exact_gamma(int k, const EnvParams& p) { return exact_gamma(k, make_kernel(p)); }

SpectralDensity::SpectralDensity(Kernel kern) : kern_(std::move(kern)) {}

double SpectralDensity::operator()(double eta) const {
  // Rotation recurrence, re-anchored every block to bound phase drift.
  constexpr int kBlock = 256;
  KahanSum re, im;
  const int len = static_cast<int>(kern_.h.size());
  const double c1 = std::cos(eta), s1 = std::sin(eta);
  for (int b = 0; b < len; b += kBlock) {
    const double ang = static_cast<double>(kern_.j_lo + b) * eta;
    double c = std::cos(ang), s = std::sin(ang);
    const int e = std::min(len, b + kBlock);
    double br = 0.0, bi = 0.0;
    for (int t = b; t < e; ++t) {
      br += kern_.h[t] * c;
      bi += kern_.h[t] * s;
      const double cn = c * c1 - s * s1;
      s = s * c1 + c * s1;
      c = cn;
    }
    re.add(br);
    im.add(bi);
  }
  const double r = re.value(), i = im.value();
  return (r * r + i * i) / (2.0 * std::numbers::pi);
}

double spectral_density(double eta, const EnvParams& p) { return SpectralDensity(make_kernel(p))(eta); }

double spectral_constant_D(double hurst) {
  return 2.0 * boost::math::tgamma(2.0 - 2.0 * hurst) * std::cos((1.0 - hurst) * std::numbers::pi);
}

double limit_spectral_density(double eta, double hurst) {
  if (eta == 0.0) throw SingularityError("limit spectral density is singular at eta = 0");
  return std::pow(std::abs(eta), 1.0 - 2.0 * hurst) / spectral_constant_D(hurst);
}

double CovarianceModel::operator()(int k) const {
  if (k < 0) k = -k;
  if (k <= max_lag()) return gamma[k];
  if (k > kernel_span) return 0.0;
  throw ArgumentError("covariance lag " + std::to_string(k) + " beyond the tabulated range " +
                      std::to_string(max_lag()));
}

CovarianceModel make_covariance_model(const Kernel& kern, const EnvParams& p, int max_lag) {
  CovarianceModel m;
  m.params = p;
  m.kernel_span = kern.span();
  m.lambda = tail_constant(p);
  const int lag = std::max(0, std::min(max_lag, kern.span()));
  m.gamma = fft::autocorrelation(kern.h, static_cast<std::size_t>(lag));
  return m;
}

CovarianceModel make_covariance_model(const EnvParams& p, int max_lag) {
  return make_covariance_model(make_kernel(p), p, max_lag);
}

EnvironmentField::EnvironmentField(const EnvParams& p, int n_time, int x_lo, int x_hi, std::uint64_t seed)
    : params_(p), n_(n_time), x_lo_(x_lo), x_hi_(x_hi), seed_(seed) {
  if (n_time < 1 || x_lo > x_hi) throw ArgumentError("environment needs n >= 1 and x_lo <= x_hi");
  values_.assign(static_cast<std::size_t>(n_time) * static_cast<std::size_t>(width()), 0.0);
}

void draw_innovations(XiDist d, std::uint64_t key, std::span<double> out) {
  CounterRng rng(key);
  if (d == XiDist::StandardGaussian) {
    boost::random::normal_distribution<double> normal;
    for (double& v : out) v = normal(rng);
    return;
  }
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t bits = rng();
    const std::size_t m = std::min<std::size_t>(64, out.size() - i);
    for (std::size_t b = 0; b < m; ++b) out[i + b] = 2.0 * static_cast<double>((bits >> b) & 1u) - 1.0;
    i += m;
  }
}

EnvironmentSampler::EnvironmentSampler(const EnvParams& p, int x_lo, int x_hi, ConvolutionMethod method)
    : params_(p), kern_(make_kernel(p)), x_lo_(x_lo), x_hi_(x_hi) {
  if (x_lo > x_hi) throw ArgumentError("sampler window requires x_lo <= x_hi");
  const std::size_t w = static_cast<std::size_t>(x_hi - x_lo + 1);
  bool fft = method == ConvolutionMethod::Fft;
  if (method == ConvolutionMethod::Auto) fft = w * kern_.h.size() > kDirectWorkLimit && kern_.h.size() > 16;
  if (fft) corr_.emplace(kern_.h, w);
}

EnvironmentSampler::Scratch EnvironmentSampler::make_scratch() const {
  Scratch s;
  if (corr_) s.ws.emplace(corr_->transform_size());
  else s.xi.resize(static_cast<std::size_t>(x_hi_ - x_lo_) + kern_.h.size());
  return s;
}

void EnvironmentSampler::fill_row(int i, std::uint64_t seed, std::span<double> out, Scratch& s) const {
  const std::size_t w = static_cast<std::size_t>(x_hi_ - x_lo_ + 1);
  if (out.size() != w) throw ArgumentError("fill_row: output width mismatch");
  const std::size_t len = w + kern_.h.size() - 1;
  const std::uint64_t key = stream_key(seed, static_cast<std::uint64_t>(i));
  if (corr_) {
    draw_innovations(params_.xi, key, {s.ws->real.get(), len});
    corr_->apply_in_place(*s.ws);
    std::copy_n(s.ws->real.get(), w, out.begin());
  } else {
    draw_innovations(params_.xi, key, {s.xi.data(), len});
    fft::correlate_direct(kern_.h, std::span<const double>(s.xi.data(), len), out);
  }
}

EnvironmentField EnvironmentSampler::sample(int n, std::uint64_t seed, std::size_t budget) const {
  if (n < 1) throw ArgumentError("sample_environment requires n >= 1");
  const std::size_t w = static_cast<std::size_t>(x_hi_ - x_lo_ + 1);
  const std::size_t bytes = static_cast<std::size_t>(n) * w * sizeof(double);
  if (bytes > budget) {
    std::ostringstream os;
    os << "environment grid of " << n << " x " << w << " needs " << bytes << " bytes, budget is " << budget;
    throw ResourceError(os.str(), bytes);
  }
  EnvironmentField f(params_, n, x_lo_, x_hi_, seed);
  auto s = make_scratch();
  for (int i = 1; i <= n; ++i) fill_row(i, seed, f.row(i), s);
  return f;
}

EnvironmentField sample_environment(const EnvParams& p, int n, int x_lo, int x_hi, std::uint64_t seed,
                                    const SampleOptions& opt) {
  p.validate();
  return EnvironmentSampler(p, x_lo, x_hi, opt.method).sample(n, seed, opt.memory_budget_bytes);
}

}  // namespace polymer
