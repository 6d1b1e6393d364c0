#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polymer/env_field.hpp"

namespace polymer {

enum class PartitionVariant { Exponential, Modified, Tilted };
enum class Endpoint { PointToLine, PointToPoint };
enum class Normalization { Raw, HalfSqrtN, ExpNormalized };

std::string to_string(PartitionVariant v);
std::string to_string(Endpoint e);

struct PartitionParams {
  double beta = 0.0;
  int n = 1;
  double hurst = 0.75;
  PartitionVariant variant = PartitionVariant::Modified;

  double rho() const noexcept { return hurst / 2.0; }
  /// beta n^{-rho}, the inverse temperature actually applied at each step.
  double step_beta() const;
  void validate() const;
};

/// Values on the parity cone of a start point, one level per time step, with a
/// per-level log scale: value(k,x) = mantissa(k,x) * exp(log_scale(k)).
///
/// Point-to-point surfaces start at (start_time, start_site) and z(k,x) is the
/// partition function of paths ending at (k,x). Point-to-line surfaces hold
/// V(k,x), the partition function of paths from (k,x) to time n; the polymer
/// value from the origin is V(0,0).
class PartitionSurface {
 public:
  PartitionSurface() = default;
  PartitionSurface(Endpoint e, int start_time, int start_site, int n);

  Endpoint endpoint() const noexcept { return endpoint_; }
  int start_time() const noexcept { return m0_; }
  int start_site() const noexcept { return y0_; }
  int n() const noexcept { return n_; }
  Normalization normalization = Normalization::Raw;
  PartitionVariant variant = PartitionVariant::Modified;
  double beta = 0.0;
  double hurst = 0.75;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  bool in_cone(int k, int x) const noexcept;
  double value(int k, int x) const;
  double mantissa(int k, int x) const;
  double log_scale(int k) const { return log_scale_.at(k - m0_); }

  /// Point-to-line: V(0,0) (or V(start)). Point-to-point: z(n, x).
  double endpoint_value(int x = 0) const;

  // Raw level access for the recursions.
  double* level(int k) { return cells_.data() + offset(k - m0_); }
  const double* level(int k) const { return cells_.data() + offset(k - m0_); }
  int level_size(int k) const noexcept { return k - m0_ + 1; }
  /// Leftmost site of level k.
  int level_lo(int k) const noexcept { return y0_ - (k - m0_); }
  void set_log_scale(int k, double s) { log_scale_.at(k - m0_) = s; }

 private:
  static std::size_t offset(int r) noexcept {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(r + 1) / 2;
  }
  Endpoint endpoint_ = Endpoint::PointToPoint;
  int m0_ = 0, y0_ = 0, n_ = 0;
  std::vector<double> cells_;
  std::vector<double> log_scale_;
};

struct StartPoint {
  int time = 0;
  int site = 0;
};

PartitionSurface dp_modified_partition(const EnvironmentField& env, const PartitionParams& params,
                                       Endpoint endpoint = Endpoint::PointToLine, StartPoint start = {});

/// Exponential weights e^{b omega}; when normalized, each level also carries e^{-lambda(b)}.
PartitionSurface dp_exp_partition(const EnvironmentField& env, const PartitionParams& params,
                                  Endpoint endpoint = Endpoint::PointToLine, bool normalized = false,
                                  StartPoint start = {});

/// Log-Laplace transform lambda(b) = log E e^{b omega} of one environment value.
double log_laplace(double b, const EnvParams& p);
double log_laplace(double b, const Kernel& kern, XiDist xi);

struct TiltedField {
  EnvironmentField values;  ///< (e^{b omega - lambda(b)} - 1)/b
  double b = 0.0;
  double lambda = 0.0;
  /// Appell-basis coefficients c_1, c_2, ...: c_j = b^{j-1}/j!.
  std::vector<double> appell_coeffs;
  /// E[tilde omega(x) tilde omega(x+k)] in closed form.
  double covariance(int k) const;
  Kernel kernel;
};

TiltedField tilt_environment(const EnvironmentField& env, double beta, int n, int n_coeffs = 8);

/// Modified recursion driven by the tilted field.
PartitionSurface dp_tilted_partition(const TiltedField& tilted, const PartitionParams& params,
                                     Endpoint endpoint = Endpoint::PointToLine, StartPoint start = {});

/// E_Q[z_n^2] over two independent walks, exact for the given covariance.
/// Point-to-line uses the difference walk (O(n^2)); point-to-point tracks
/// both walks jointly (O(n^3)) and pins them to (n, end_site).
double two_walk_second_moment(int n, double beta, double hurst, const CovarianceModel& gamma,
                              Endpoint mode, int end_site = 0);

/// sum over i in D_j of sum_x prod omega(i_l, x_l) p_j(i, x), j = 0..k_max, from one
/// j-level forward DP (origin start).
std::vector<double> ordered_walk_sums(const EnvironmentField& env, int n, int k_max);

/// chaos_term(k) for k = 0..k_max (terms beyond n are zero) from one k-level DP.
std::vector<double> chaos_terms(const EnvironmentField& env, int n, double beta, double hurst, int k_max);
double chaos_term(const EnvironmentField& env, int n, double beta, double hurst, int k);

}  // namespace polymer
