#pragma once

#include <span>
#include <variant>
#include <vector>

#include "polymer/env_field.hpp"
#include "polymer/tensor.hpp"

namespace polymer {

/// The walk-density weight n^{k/2} p^n_k.
struct WalkDensityWeight {};

struct UStatSpec {
  int k = 1;
  std::variant<TensorKernel, WalkDensityWeight> weight = WalkDensityWeight{};
  int n = 1;
  void validate() const;
};

enum class UStatMethod { Auto, Newton, SymmetricDp, Direct };

/// Average of f over the lattice cell ((i-1)/n, i/n] x ((x-1)/sqrt n, (x+1)/sqrt n].
double f_bar(const RectFn& f, int n, int i, int x);
/// Cell average of a symmetric kernel over a product of cells.
double f_bar(const TensorKernel& f, int n, std::span<const int> times, std::span<const int> sites);

/// Range of sites whose cells can intersect the rectangle's spatial support.
std::pair<int, int> rect_site_range(const RectFn& f, int n);
/// Rows whose cells can intersect the rectangle's time support.
std::pair<int, int> rect_row_range(const RectFn& f, int n);

/// q_i = sum_{x <-> i} fbar(i, x) omega(i, x), i = 1..n (index i-1).
std::vector<double> row_sums(const EnvironmentField& env, const RectFn& g, int n);

/// S_k(f) from row sums already computed, rows[j] for factor j of f.
double ustat_from_row_sums(const TensorKernel& f, const std::vector<std::vector<double>>& rows,
                           UStatMethod method = UStatMethod::Auto);

double ustat_eval(const EnvironmentField& env, const UStatSpec& spec, UStatMethod method = UStatMethod::Auto);

/// ustat_eval * n^{-(H+1)k/2}.
double ustat_scaled(const EnvironmentField& env, const UStatSpec& spec, UStatMethod method = UStatMethod::Auto);

/// sum over tuples of distinct indices of prod_j q^{(type_j)}, where type j
/// occurs counts[j] times. Newton: power sums and the multivariate Newton
/// recursion. SymmetricDp: row-by-row generating-polynomial update.
double distinct_product_sum(const std::vector<std::vector<double>>& q, const std::vector<int>& counts,
                            UStatMethod method);

/// E[S_k(f)^2] for k in {1, 2}; throws DomainError for larger k.
double ustat_exact_variance(const UStatSpec& spec, const CovarianceModel& gamma);

/// E[S_1(f) S_1(g)] for order-1 kernels.
double ustat_exact_covariance(const UStatSpec& a, const UStatSpec& b, const CovarianceModel& gamma);

}  // namespace polymer
