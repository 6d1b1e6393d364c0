#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polymer/rect.hpp"
#include "polymer/rng.hpp"
#include "polymer/tensor.hpp"

namespace polymer {

/// Gaussian field W on a finite set of rectangles: W(f_i) = sum_l L(i,l) zeta_l
/// with zeta i.i.d. standard normal and L L^T = Gram (up to declared jitter).
class FracFieldSampler {
 public:
  FracFieldSampler(std::vector<RectFn> basis, double hurst, std::uint64_t seed);

  /// Collects the distinct factor supports of the given kernels.
  static FracFieldSampler for_kernels(const std::vector<const TensorKernel*>& kernels, double hurst,
                                      std::uint64_t seed);

  const std::vector<RectFn>& basis() const noexcept { return basis_; }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  const Eigen::MatrixXd& loadings() const noexcept { return L_; }
  int dim() const noexcept { return static_cast<int>(basis_.size()); }
  int rank() const noexcept { return static_cast<int>(L_.cols()); }
  double jitter() const noexcept { return jitter_; }
  double hurst() const noexcept { return hurst_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// ||L L^T - G|| / ||G|| (Frobenius).
  double factorization_residual() const;

  /// Index of the basis rectangle with the support of f and the ratio
  /// f.coeff / basis.coeff; throws ArgumentError if absent.
  std::pair<int, double> locate(const RectFn& f) const;

  /// Orthonormal coordinates of draw number j (deterministic in seed, j).
  Eigen::VectorXd coordinates(std::uint64_t j) const;
  Eigen::VectorXd field_from(const Eigen::VectorXd& zeta) const { return L_ * zeta; }

 private:
  std::vector<RectFn> basis_;
  double hurst_;
  std::uint64_t seed_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd L_;
  double jitter_ = 0.0;
  std::vector<std::string> warnings_;
};

/// n_samples x dim matrix of W(f_i) draws.
Eigen::MatrixXd sample_field(const FracFieldSampler& sampler, int n_samples);

/// I_k(f) as a polynomial in the sampler's orthonormal coordinates: a sum of
/// products of Hermite polynomials. Built once, evaluated per draw.
class CompiledIntegral {
 public:
  CompiledIntegral(const TensorKernel& f, const FracFieldSampler& sampler);
  double operator()(const Eigen::VectorXd& zeta) const;
  int order() const noexcept { return order_; }
  std::size_t monomials() const noexcept { return coeffs_.size(); }

 private:
  int order_;
  int rank_;
  std::vector<double> coeffs_;
  std::vector<std::vector<int>> exps_;
};

std::vector<double> multiple_integral_sample(const TensorKernel& f, const FracFieldSampler& sampler,
                                             int n_samples);

struct IdentityReport {
  std::string identity;
  int k = 0;
  int n_samples = 0;
  double residual_mean = 0.0;
  double residual_se = 0.0;
  double residual_var = 0.0;
  double residual_var_se = 0.0;
  double pathwise_max = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// I_l(f) I_1(g) - I_{l+1}(f (x) g) - l I_{l-1}(f (x)_1 g) on common draws.
IdentityReport verify_product_formula(const TensorKernel& f, const RectFn& g, double hurst, int n_samples,
                                      std::uint64_t seed);

}  // namespace polymer
