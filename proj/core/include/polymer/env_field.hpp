#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polymer/fft.hpp"

namespace polymer {

enum class XiDist { StandardGaussian, Rademacher };

/// OneSided: psi_j = 0 for j < 0 (causal linear process).
/// Symmetric: psi_j = psi_{-j}. Point: psi = delta at 0 only (i.i.d. field).
enum class KernelShape { OneSided, Symmetric, Point };

/// Value at j = 0. Unit: psi_0 = delta. ZetaCorrected: psi_0 = -zeta(alpha) delta
/// per side, which removes the leading lattice correction to the tail of gamma.
enum class Psi0Rule { Unit, ZetaCorrected };

struct EnvParams {
  double hurst = 0.75;
  double delta = 1.0;
  int cutoff = 100000;
  XiDist xi = XiDist::StandardGaussian;
  KernelShape shape = KernelShape::OneSided;
  Psi0Rule psi0 = Psi0Rule::ZetaCorrected;
  double lambda_target = 0.375;

  double alpha() const noexcept { return 1.5 - hurst; }

  /// Throws DomainError naming the violated constraint.
  void validate() const;

  /// delta chosen so that the tail constant equals lambda_target
  /// (default H(2H-1)).
  static EnvParams calibrated(double hurst, int cutoff, XiDist xi = XiDist::StandardGaussian,
                              KernelShape shape = KernelShape::OneSided,
                              std::optional<double> lambda_target = std::nullopt);
  static EnvParams white(double delta = 1.0, XiDist xi = XiDist::StandardGaussian);
};

std::string to_string(XiDist d);
std::string to_string(KernelShape s);
std::string to_string(Psi0Rule r);
XiDist parse_xi_dist(const std::string& s);
KernelShape parse_kernel_shape(const std::string& s);
Psi0Rule parse_psi0_rule(const std::string& s);

double psi_coeff(int j, const EnvParams& p);

/// Dense kernel h[t] = psi_{j_lo + t}, t = 0..size-1.
struct Kernel {
  int j_lo = 0;
  std::vector<double> h;
  int j_hi() const noexcept { return j_lo + static_cast<int>(h.size()) - 1; }
  /// Largest lag with possibly nonzero covariance.
  int span() const noexcept { return static_cast<int>(h.size()) - 1; }
};

Kernel make_kernel(const EnvParams& p);

/// Asymptotic constant lambda in gamma(k) ~ lambda k^{1-2 alpha}, for the
/// configured kernel shape and delta (0 for the point kernel).
double tail_constant(const EnvParams& p);

double calibrate_delta(double hurst);
double calibrate_delta(double hurst, KernelShape shape, double lambda_target);

double exact_gamma(int k, const EnvParams& p);
double exact_gamma(int k, const Kernel& kern);

/// (1/2pi) |sum_j psi_j e^{i j eta}|^2 for a fixed kernel.
class SpectralDensity {
 public:
  explicit SpectralDensity(Kernel kern);
  double operator()(double eta) const;

 private:
  Kernel kern_;
};

double spectral_density(double eta, const EnvParams& p);

/// |eta|^{1-2H} / (2 Gamma(2-2H) cos((1-H) pi)); throws SingularityError at 0.
double limit_spectral_density(double eta, double hurst);
double spectral_constant_D(double hurst);

struct CovarianceModel {
  EnvParams params;
  std::vector<double> gamma;  ///< gamma[k], k = 0..max_lag()
  double lambda = 0.0;

  int max_lag() const noexcept { return static_cast<int>(gamma.size()) - 1; }
  /// gamma(k) for any k; zero beyond the kernel span, throws beyond the table
  /// if the kernel span is larger than the table.
  double operator()(int k) const;
  int kernel_span = 0;
};

/// Table up to min(max_lag, kernel span) via FFT autocorrelation.
CovarianceModel make_covariance_model(const EnvParams& p, int max_lag);
CovarianceModel make_covariance_model(const Kernel& kern, const EnvParams& p, int max_lag);

class EnvironmentField {
 public:
  EnvironmentField() = default;
  EnvironmentField(const EnvParams& p, int n_time, int x_lo, int x_hi, std::uint64_t seed);

  int n_time() const noexcept { return n_; }
  int x_lo() const noexcept { return x_lo_; }
  int x_hi() const noexcept { return x_hi_; }
  int width() const noexcept { return x_hi_ - x_lo_ + 1; }
  std::uint64_t seed() const noexcept { return seed_; }
  const EnvParams& params() const noexcept { return params_; }

  /// Row i in 1..n_time.
  std::span<const double> row(int i) const {
    return {values_.data() + static_cast<std::size_t>(i - 1) * width(), static_cast<std::size_t>(width())};
  }
  std::span<double> row(int i) {
    return {values_.data() + static_cast<std::size_t>(i - 1) * width(), static_cast<std::size_t>(width())};
  }
  double operator()(int i, int x) const {
    return values_[static_cast<std::size_t>(i - 1) * width() + (x - x_lo_)];
  }
  double& at(int i, int x) { return values_[static_cast<std::size_t>(i - 1) * width() + (x - x_lo_)]; }

  bool covers(int n, int lo, int hi) const noexcept {
    return n <= n_ && lo >= x_lo_ && hi <= x_hi_;
  }

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

 private:
  EnvParams params_;
  int n_ = 0;
  int x_lo_ = 0;
  int x_hi_ = -1;
  std::uint64_t seed_ = 0;
  std::vector<double> values_;
};

enum class ConvolutionMethod { Auto, Fft, Direct };

struct SampleOptions {
  ConvolutionMethod method = ConvolutionMethod::Auto;
  std::size_t memory_budget_bytes = std::size_t{2} << 30;
};

/// Reusable row generator for a fixed kernel and column window.
class EnvironmentSampler {
 public:
  EnvironmentSampler(const EnvParams& p, int x_lo, int x_hi,
                     ConvolutionMethod method = ConvolutionMethod::Auto);

  struct Scratch {
    std::optional<fft::Workspace> ws;
    std::vector<double> xi;
  };
  Scratch make_scratch() const;

  /// Writes omega(i, x_lo..x_hi) for the stream keyed by (seed, i).
  void fill_row(int i, std::uint64_t seed, std::span<double> out, Scratch& s) const;

  EnvironmentField sample(int n, std::uint64_t seed,
                          std::size_t memory_budget_bytes = SampleOptions{}.memory_budget_bytes) const;

  const Kernel& kernel() const noexcept { return kern_; }
  const EnvParams& params() const noexcept { return params_; }
  bool uses_fft() const noexcept { return corr_.has_value(); }

 private:
  EnvParams params_;
  Kernel kern_;
  int x_lo_, x_hi_;
  std::optional<fft::Correlator> corr_;
};

/// Draws the i.i.d. innovations of one row stream into out.
void draw_innovations(XiDist d, std::uint64_t key, std::span<double> out);

EnvironmentField sample_environment(const EnvParams& p, int n, int x_lo, int x_hi, std::uint64_t seed,
                                    const SampleOptions& opt = {});

}  // namespace polymer
