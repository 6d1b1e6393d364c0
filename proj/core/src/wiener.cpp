#include "polymer/wiener.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "polymer/errors.hpp"
#include "polymer/numeric.hpp"

namespace polymer {

namespace {
constexpr double kJitterEps = 1e-12;
constexpr double kNonPsdTol = 1e-10;
}  // namespace

FracFieldSampler::FracFieldSampler(std::vector<RectFn> basis, double hurst, std::uint64_t seed)
    : basis_(std::move(basis)), hurst_(hurst), seed_(seed) {
  const int d = dim();
  if (d == 0) throw ArgumentError("sampler needs at least one rectangle");
  gram_.resize(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) gram_(i, j) = gram_(j, i) = inner_H(basis_[i], basis_[j], hurst);
  const double trace = gram_.trace();

  Eigen::LLT<Eigen::MatrixXd> llt(gram_);
  if (llt.info() == Eigen::Success) {
    L_ = llt.matrixL();
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin < -kNonPsdTol * trace) {
    std::ostringstream os;
    os << "Gram matrix is not positive semidefinite: eigenvalue " << lmin << " (trace " << trace << ")";
    throw NumericalError(os.str());
  }
  double j = kJitterEps * trace / d;
  for (int attempt = 0; attempt < 3; ++attempt, j *= 10.0) {
    Eigen::LLT<Eigen::MatrixXd> l2(gram_ + j * Eigen::MatrixXd::Identity(d, d));
    if (l2.info() == Eigen::Success) {
      L_ = l2.matrixL();
      jitter_ = j;
      warnings_.push_back("Gram matrix singular; factorized with jitter");
      return;
    }
  }
  // Reduced-rank fallback from the eigen decomposition.
  const double cut = kJitterEps * std::max(trace, 1e-300);
  std::vector<int> keep;
  for (int i = 0; i < d; ++i)
    if (es.eigenvalues()(i) > cut) keep.push_back(i);
  L_.resize(d, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    L_.col(c) = es.eigenvectors().col(keep[c]) * std::sqrt(es.eigenvalues()(keep[c]));
  warnings_.push_back("linearly dependent rectangles; reduced-rank orthonormalization");
}

FracFieldSampler FracFieldSampler::for_kernels(const std::vector<const TensorKernel*>& kernels, double hurst,
                                               std::uint64_t seed) {
  std::vector<RectFn> b;
  for (const auto* k : kernels)
    for (const auto& f : k->factors())
      if (std::none_of(b.begin(), b.end(), [&](const RectFn& x) { return x.same_support(f); })) b.push_back(f);
  return FracFieldSampler(std::move(b), hurst, seed);
}

double FracFieldSampler::factorization_residual() const {
  return (L_ * L_.transpose() - gram_).norm() / gram_.norm();
}

std::pair<int, double> FracFieldSampler::locate(const RectFn& f) const {
  for (int i = 0; i < dim(); ++i)
    if (basis_[i].same_support(f)) return {i, f.coeff / basis_[i].coeff};
  throw ArgumentError("rectangle is not part of the sampler basis");
}

Eigen::VectorXd FracFieldSampler::coordinates(std::uint64_t j) const {
  CounterRng rng(stream_key(seed_, j));
  boost::random::normal_distribution<double> normal;
  Eigen::VectorXd z(rank());
  for (int l = 0; l < rank(); ++l) z(l) = normal(rng);
  return z;
}

Eigen::MatrixXd sample_field(const FracFieldSampler& sampler, int n_samples) {
  Eigen::MatrixXd out(n_samples, sampler.dim());
  for (int s = 0; s < n_samples; ++s) out.row(s) = sampler.field_from(sampler.coordinates(s)).transpose();
  return out;
}

CompiledIntegral::CompiledIntegral(const TensorKernel& f, const FracFieldSampler& sampler)
    : order_(f.order()), rank_(sampler.rank()) {
  using Poly = std::map<std::vector<int>, double>;
  Poly total;
  const auto& L = sampler.loadings();
  for (const auto& term : f.terms()) {
    Poly p{{std::vector<int>(rank_, 0), term.coeff}};
    for (const auto& [idx, mult] : term.parts) {
      const auto [bi, ratio] = sampler.locate(f.factors()[idx]);
      for (int rep = 0; rep < mult; ++rep) {
        Poly q;
        for (const auto& [e, c] : p)
          for (int l = 0; l < rank_; ++l) {
            const double a = ratio * L(bi, l);
            if (a == 0.0) continue;
            auto e2 = e;
            ++e2[l];
            q[e2] += c * a;
          }
        p = std::move(q);
      }
    }
    for (const auto& [e, c] : p) total[e] += c;
  }
  for (const auto& [e, c] : total) {
    exps_.push_back(e);
    coeffs_.push_back(c);
  }
}

double CompiledIntegral::operator()(const Eigen::VectorXd& zeta) const {
  if (zeta.size() != rank_) throw ArgumentError("coordinate vector has wrong dimension");
  std::vector<std::vector<double>> h(rank_);
  for (int l = 0; l < rank_; ++l) h[l] = hermite_all(order_, zeta(l));
  KahanSum s;
  for (std::size_t m = 0; m < coeffs_.size(); ++m) {
    double v = coeffs_[m];
    for (int l = 0; l < rank_; ++l) v *= h[l][exps_[m][l]];
    s.add(v);
  }
  return s.value();
}

std::vector<double> multiple_integral_sample(const TensorKernel& f, const FracFieldSampler& sampler,
                                             int n_samples) {
  if (f.order() < 1) throw ArgumentError("multiple integral needs order >= 1");
  CompiledIntegral I(f, sampler);
  std::vector<double> out(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) out[s] = I(sampler.coordinates(s));
  return out;
}

IdentityReport verify_product_formula(const TensorKernel& f, const RectFn& g, double hurst, int n_samples,
                                      std::uint64_t seed) {
  const int l = f.order();
  const TensorKernel G = TensorKernel::power(g, 1);
  const TensorKernel prod = contract(f, G, 0, hurst);
  const TensorKernel c1 = contract(f, G, 1, hurst);
  const auto sampler = FracFieldSampler::for_kernels({&f, &G, &prod}, hurst, seed);
  CompiledIntegral If(f, sampler), Ig(G, sampler), Ip(prod, sampler);
  // Order-0 kernels are constants; an empty contraction contributes nothing.
  double c1_const = 0.0;
  std::optional<CompiledIntegral> Ic;
  if (!c1.empty()) {
    if (c1.order() == 0) c1_const = c1.terms().front().coeff;
    else Ic.emplace(c1, sampler);
  }
  std::vector<double> r(static_cast<std::size_t>(n_samples));
  IdentityReport rep;
  rep.identity = "product_formula";
  rep.k = l;
  rep.n_samples = n_samples;
  for (int s = 0; s < n_samples; ++s) {
    const auto z = sampler.coordinates(s);
    const double lower = Ic ? (*Ic)(z) : c1_const;
    r[s] = If(z) * Ig(z) - Ip(z) - l * lower;
    rep.pathwise_max = std::max(rep.pathwise_max, std::abs(r[s]));
  }
  KahanSum m;
  for (double v : r) m.add(v);
  rep.residual_mean = m.value() / n_samples;
  KahanSum v2, v4;
  for (double v : r) {
    const double d = v - rep.residual_mean;
    v2.add(d * d);
    v4.add(d * d * d * d);
  }
  rep.residual_var = v2.value() / std::max(1, n_samples - 1);
  rep.residual_se = std::sqrt(rep.residual_var / n_samples);
  const double m4 = v4.value() / n_samples;
  rep.residual_var_se = std::sqrt(std::max(0.0, m4 - rep.residual_var * rep.residual_var) / n_samples);
  rep.threshold = 3.0;
  const bool mean_ok = std::abs(rep.residual_mean) <= 3.0 * rep.residual_se + 1e-12;
  const bool var_ok = rep.residual_var <= 3.0 * rep.residual_var_se + 1e-20;
  rep.pass = mean_ok && var_ok;
  return rep;
}

}  // namespace polymer
