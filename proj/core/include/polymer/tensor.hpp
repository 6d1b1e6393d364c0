#pragma once

#include <utility>
#include <vector>

#include "polymer/rect.hpp"

namespace polymer {

/// coeff * Sym(g_{i1}^{(x) m1} (x) ... ) with factor indices into the owning kernel.
struct TensorTerm {
  double coeff = 1.0;
  std::vector<std::pair<int, int>> parts;  ///< (factor index, multiplicity), sorted by index
  int order() const noexcept {
    int k = 0;
    for (const auto& p : parts) k += p.second;
    return k;
  }
};

/// Symmetric kernel of order k: a linear combination of symmetrized
/// elementary tensors of rectangle functions.
class TensorKernel {
 public:
  explicit TensorKernel(int order = 0) : order_(order) {}

  static TensorKernel power(const RectFn& g, int k, double coeff = 1.0);
  static TensorKernel elementary(const std::vector<std::pair<RectFn, int>>& parts, double coeff = 1.0);

  int order() const noexcept { return order_; }
  const std::vector<RectFn>& factors() const noexcept { return factors_; }
  const std::vector<TensorTerm>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  /// Adds coeff * Sym(prod parts); parts are (factor, multiplicity).
  void add_term(double coeff, const std::vector<std::pair<RectFn, int>>& parts);

  TensorKernel& operator+=(const TensorKernel& o);
  TensorKernel scaled(double c) const;

  /// Slot list of a term: each factor repeated by its multiplicity.
  std::vector<RectFn> slots(const TensorTerm& t) const;

 private:
  int factor_index(const RectFn& f);
  void merge_term(TensorTerm t);

  int order_;
  std::vector<RectFn> factors_;
  std::vector<TensorTerm> terms_;
};

/// <f, g> in the k-fold tensor space (symmetric kernels).
double inner_H(const TensorKernel& f, const TensorKernel& g, double hurst);
inline double norm_H2(const TensorKernel& f, double hurst) { return inner_H(f, f, hurst); }

/// r-fold contraction f (x)_r g, symmetrized. r = 0 is the tensor product.
TensorKernel contract(const TensorKernel& f, const TensorKernel& g, int r, double hurst);

}  // namespace polymer
