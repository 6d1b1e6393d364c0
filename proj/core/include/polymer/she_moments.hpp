#pragma once

#include <cstdint>
#include <vector>

namespace polymer {

struct ChaosMoment {
  int k = 0;
  double estimate = 0.0;
  double se = 0.0;
  long samples = 0;
};

struct ThetaOptions {
  long n_mc = 200000;
  std::uint64_t seed = 1;
  bool force = false;  ///< allow k > 6
};

/// k-th chaos contribution to E u(t,x;s,y)^2 for the heat equation driven by
/// time-white, space-fractional noise:
///   beta^{2k} int_{s<t_1<..<t_k<t} E prod_i K(X_{t_i}, Y_{t_i}) dt * P_{t-s}(x-y)^2,
/// with X, Y independent Brownian bridges from (s,y) to (t,x).
ChaosMoment theta_k(int k, double t, double x, double s, double y, double beta, double hurst,
                    const ThetaOptions& opt = {});

/// Closed form of the k = 1 term.
double theta_1_exact(double t, double x, double s, double y, double beta, double hurst);

/// k = 1 term by nested deterministic quadrature (time integral of the
/// bridge-difference moment).
double theta_1_quadrature(double t, double x, double s, double y, double beta, double hurst);

struct ChaosSum {
  double value = 0.0;
  double se = 0.0;
  std::vector<ChaosMoment> terms;  ///< k = 0..k_max
  double tail_estimate = 0.0;      ///< geometric extrapolation from the last two terms
  bool partial_sums_ok = true;     ///< no term below -2 SE
};

ChaosSum chaos_second_moment(double t, double x, double s, double y, double beta, double hurst, int k_max,
                             const ThetaOptions& opt = {});

}  // namespace polymer
