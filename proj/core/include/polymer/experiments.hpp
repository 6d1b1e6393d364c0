#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "polymer/env_field.hpp"
#include "polymer/harness.hpp"

namespace polymer {

struct ExperimentResult {
  std::vector<TestReport> reports;
  /// File name -> content, written next to the results table.
  std::map<std::string, std::string> artifacts;

  bool passed() const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

ExperimentResult env_check(const ExperimentConfig& cfg);
ExperimentResult variance_asymptotics(const ExperimentConfig& cfg);
ExperimentResult clt_check(const ExperimentConfig& cfg);
ExperimentResult ustat_limit_check(const ExperimentConfig& cfg);
ExperimentResult partition_limit_check(const ExperimentConfig& cfg);
ExperimentResult tightness_check(const ExperimentConfig& cfg);
ExperimentResult chaos_moments_check(const ExperimentConfig& cfg);
ExperimentResult identities_check(const ExperimentConfig& cfg);

/// A_n^2 = int_{-pi}^{pi} (cos^2 - cos^{2n+2})/(1 - cos^2) f(eta) d eta by
/// adaptive Gauss-Kronrod on geometrically refined panels.
double walk_variance_quadrature(int n, const EnvParams& p);
/// Several n at once; the spectral density is evaluated once per node.
std::vector<double> walk_variance_quadrature(const std::vector<int>& ns, const EnvParams& p);
/// The same quantity as the lattice sum sum_{i<=n} sum_d p(2i, d) gamma(d).
double walk_variance_lattice(int n, const CovarianceModel& gamma);

/// 4 beta^2 Gamma(1 - H/2) / (D H).
double variance_sigma2_stated(double hurst, double beta);
/// beta^2 lambda Gamma(1 - H) / (D H), the limit of A_n^2 / n^H for tail constant lambda.
double variance_sigma2_limit(double hurst, double lambda, double beta);

/// Row weights pulled back to the innovations: sum_x w(x) omega(i, x) =
/// sum_u b[u] xi(i, u_lo + u), matching the sampler's stream layout for a
/// window starting at x_lo.
struct RowFunctional {
  int x_lo = 0;
  std::vector<double> b;
};

/// One functional per weight vector; weights[r] starts at site x_lo[r].
std::vector<RowFunctional> make_row_functionals(const Kernel& kern, std::span<const int> x_lo,
                                                const std::vector<std::vector<double>>& weights);

}  // namespace polymer
