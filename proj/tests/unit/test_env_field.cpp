#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "polymer/env_field.hpp"
#include "polymer/rng.hpp"
#include "polymer/errors.hpp"
#include "test_util.hpp"

using namespace polymer;

namespace {

EnvParams small_params(int cutoff, KernelShape shape = KernelShape::OneSided) {
  return EnvParams::calibrated(0.75, cutoff, XiDist::StandardGaussian, shape);
}

}  // namespace

TEST(CalibrateDelta, MatchesGammaFunctionClosedFormAtThreeQuarters) {
  const double d2 = 0.375 * std::tgamma(0.75) / (std::tgamma(0.5) * std::tgamma(0.25));
  EXPECT_NEAR(calibrate_delta(0.75), std::sqrt(d2), 1e-13);
  EXPECT_NEAR(calibrate_delta(0.75), 0.2674, 5e-5);
}

TEST(CalibrateDelta, VanishesAsHurstApproachesOneHalf) {
  const double a = calibrate_delta(0.51), b = calibrate_delta(0.501), c = calibrate_delta(0.5001);
  EXPECT_GT(a, b);
  EXPECT_GT(b, c);
  EXPECT_LT(c, 0.02);
}

TEST(CalibrateDelta, RejectsHurstOutsideOpenInterval) {
  EXPECT_THROW(calibrate_delta(0.5), DomainError);
  EXPECT_THROW(calibrate_delta(1.0), DomainError);
  EXPECT_THROW(calibrate_delta(0.3), DomainError);
}

TEST(CalibrateDelta, TailFitAtSixTenths) {
  // Regress log gamma(k) on log k over [1e3, 1e4] and compare the fitted
  // constant with the target H(2H-1). Near H = 1 the truncated kernel sum
  // converges too slowly for this window (missing mass ~ (k/M)^(2H-1)), so a
  // lower H is used here.
  const double H = 0.6;
  const auto p = EnvParams::calibrated(H, 1000000);
  const auto model = make_covariance_model(p, 10000);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int k = 1000; k <= 10000; k += 250) {
    const double x = std::log(k), y = std::log(model(k));
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double expected_slope = 1.0 - 2.0 * p.alpha();
  EXPECT_NEAR(slope, expected_slope, 0.05);
  // Constant at fixed theoretical slope, averaged in log space.
  double c = 0;
  m = 0;
  for (int k = 1000; k <= 10000; k += 250, ++m) c += std::log(model(k)) - expected_slope * std::log(k);
  EXPECT_NEAR(std::exp(c / m) / (H * (2 * H - 1)), 1.0, 0.1);
}

TEST(ExactGamma, PointKernel) {
  const auto p = EnvParams::white(0.7);
  EXPECT_DOUBLE_EQ(exact_gamma(0, p), 0.49);
  EXPECT_EQ(exact_gamma(1, p), 0.0);
  EXPECT_EQ(exact_gamma(-3, p), 0.0);
}

TEST(ExactGamma, TailWithinFivePercentAtUnitAmplitude) {
  EnvParams p;
  p.hurst = 0.75;
  p.delta = 1.0;
  p.cutoff = 100000;
  const double a = p.alpha();
  const double lambda = std::tgamma(2 * a - 1) * std::tgamma(1 - a) / std::tgamma(a);
  const double g = exact_gamma(1000, p);
  EXPECT_NEAR(g / (lambda * std::pow(1000.0, 1 - 2 * a)), 1.0, 0.05);
}

TEST(ExactGamma, SymmetricInLag) {
  for (auto shape : {KernelShape::OneSided, KernelShape::Symmetric}) {
    const auto p = small_params(50, shape);
    for (int k : {1, 7, 49, 50, 120}) EXPECT_EQ(exact_gamma(k, p), exact_gamma(-k, p));
  }
}

TEST(ExactGamma, MatchesBruteForceSum) {
  for (auto shape : {KernelShape::OneSided, KernelShape::Symmetric}) {
    const auto p = small_params(20, shape);
    for (int k = 0; k <= 45; ++k) {
      double s = 0;
      for (int y = -20; y <= 20; ++y) s += psi_coeff(y, p) * psi_coeff(y + k, p);
      EXPECT_NEAR(exact_gamma(k, p), s, 1e-14) << k;
    }
  }
}

TEST(ExactGamma, TableFromAutocorrelationMatchesDirect) {
  const auto p = small_params(300);
  const auto model = make_covariance_model(p, 400);
  for (int k = 0; k <= 300; k += 13) EXPECT_NEAR(model(k), exact_gamma(k, p), 1e-13);
  EXPECT_EQ(model(350), 0.0);
}

TEST(ExactGamma, TailSlopeOverTwoDecades) {
  const auto p = small_params(1000000);
  const auto model = make_covariance_model(p, 10000);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (double lk = 2.0; lk <= 4.0 + 1e-9; lk += 0.05) {
    const int k = static_cast<int>(std::lround(std::pow(10.0, lk)));
    const double x = std::log(k), y = std::log(model(k));
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  EXPECT_NEAR(slope, 1.0 - 2.0 * p.alpha(), 0.05);
}

TEST(PsiCoeff, SymmetricShapeUnitRule) {
  EnvParams p;
  p.shape = KernelShape::Symmetric;
  p.psi0 = Psi0Rule::Unit;
  p.delta = 0.5;
  p.cutoff = 10;
  EXPECT_EQ(psi_coeff(0, p), 0.5);
  EXPECT_EQ(psi_coeff(3, p), psi_coeff(-3, p));
  EXPECT_NEAR(psi_coeff(4, p), 0.5 * std::pow(4.0, -0.75), 1e-15);
  EXPECT_EQ(psi_coeff(11, p), 0.0);
}

TEST(SampleEnvironment, PointKernelGivesWhiteNoise) {
  const auto p = EnvParams::white(1.5);
  const auto env = sample_environment(p, 2000, 0, 99, 42);
  std::vector<double> lag0, lag1;
  for (int i = 1; i <= env.n_time(); ++i)
    for (int x = 0; x + 1 <= 99; x += 2) {
      lag0.push_back(env(i, x) * env(i, x));
      lag1.push_back(env(i, x) * env(i, x + 1));
    }
  const auto m0 = testutil::moments(lag0), m1 = testutil::moments(lag1);
  EXPECT_LT(std::abs(m0.mean - 2.25), 3 * m0.se);
  EXPECT_LT(std::abs(m1.mean), 3 * m1.se);
}

TEST(SampleEnvironment, SampleCovarianceMatchesExactGamma) {
  const auto p = small_params(256);
  const int rows = 10000;
  const auto env = sample_environment(p, rows, 0, 63, 7);
  for (int k = 0; k <= 10; ++k) {
    // One value per row (rows are independent): within-row average of lagged products.
    std::vector<double> v(rows);
    for (int i = 1; i <= rows; ++i) {
      double s = 0;
      for (int x = 0; x + k <= 63; ++x) s += env(i, x) * env(i, x + k);
      v[i - 1] = s / (64 - k);
    }
    const auto m = testutil::moments(v);
    EXPECT_LT(std::abs(m.mean - exact_gamma(k, p)), 3 * m.se) << "lag " << k;
  }
}

TEST(SampleEnvironment, RowsUncorrelated) {
  const auto p = small_params(128);
  std::vector<double> a, b;
  for (int r = 0; r < 10000; ++r) {
    const auto env = sample_environment(p, 2, 0, 0, 1000 + r);
    a.push_back(env(1, 0));
    b.push_back(env(2, 0));
  }
  double se = 0;
  const double c = testutil::covariance(a, b, &se);
  EXPECT_LT(std::abs(c), 3 * se);
}

TEST(SampleEnvironment, StationaryAcrossBasePoint) {
  const auto p = small_params(128);
  const int rows = 8000;
  const auto env = sample_environment(p, rows, -200, 200, 99);
  for (int base : {-200, 0, 190}) {
    std::vector<double> v(rows);
    for (int i = 1; i <= rows; ++i) v[i - 1] = env(i, base) * env(i, base + 3);
    const auto m = testutil::moments(v);
    EXPECT_LT(std::abs(m.mean - exact_gamma(3, p)), 3 * m.se) << base;
  }
}

TEST(SampleEnvironment, DeterministicPerSeed) {
  const auto p = small_params(500);
  const auto a = sample_environment(p, 20, -30, 40, 5);
  const auto b = sample_environment(p, 20, -30, 40, 5);
  const auto c = sample_environment(p, 20, -30, 40, 6);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_NE(a.values(), c.values());
}

TEST(SampleEnvironment, FftAndDirectAgree) {
  for (auto xi : {XiDist::StandardGaussian, XiDist::Rademacher}) {
    auto p = small_params(300, KernelShape::Symmetric);
    p.xi = xi;
    SampleOptions fft, direct;
    fft.method = ConvolutionMethod::Fft;
    direct.method = ConvolutionMethod::Direct;
    const auto a = sample_environment(p, 6, -17, 60, 11, fft);
    const auto b = sample_environment(p, 6, -17, 60, 11, direct);
    double scale = 0;
    for (double v : b.values()) scale = std::max(scale, std::abs(v));
    for (std::size_t j = 0; j < a.values().size(); ++j)
      EXPECT_NEAR(a.values()[j], b.values()[j], 1e-10 * scale);
  }
}

TEST(SampleEnvironment, ConvolutionOfInnovations) {
  // Row value equals sum_j psi_j xi_{x+j} with the innovation stream laid out from x_lo + j_lo.
  const auto p = small_params(12, KernelShape::Symmetric);
  const auto kern = make_kernel(p);
  const int lo = 3, hi = 9;
  const auto env = sample_environment(p, 2, lo, hi, 77);
  std::vector<double> xi(static_cast<std::size_t>(hi - lo) + kern.h.size());
  draw_innovations(p.xi, stream_key(77, 2), xi);
  for (int x = lo; x <= hi; ++x) {
    double s = 0;
    for (int j = kern.j_lo; j <= kern.j_hi(); ++j) s += psi_coeff(j, p) * xi[(x - lo) + (j - kern.j_lo)];
    EXPECT_NEAR(env(2, x), s, 1e-12);
  }
}

TEST(SampleEnvironment, MemoryBudgetRaisesResourceError) {
  const auto p = small_params(16);
  SampleOptions opt;
  opt.memory_budget_bytes = 1000;
  try {
    sample_environment(p, 100, 0, 99, 1, opt);
    FAIL() << "expected ResourceError";
  } catch (const ResourceError& e) {
    EXPECT_EQ(e.required_bytes, 100u * 100u * sizeof(double));
  }
}

TEST(SampleEnvironment, RademacherInnovationsAreSigns) {
  std::vector<double> v(1000);
  draw_innovations(XiDist::Rademacher, 123, v);
  int plus = 0;
  for (double x : v) {
    ASSERT_TRUE(x == 1.0 || x == -1.0);
    plus += x > 0;
  }
  EXPECT_NEAR(plus, 500, 3 * std::sqrt(250.0));
}

TEST(SpectralDensity, FlatForPointKernel) {
  const auto p = EnvParams::white(2.0);
  for (double eta : {-3.0, -1.0, 0.0, 0.5, 3.1})
    EXPECT_NEAR(spectral_density(eta, p), 4.0 / (2 * std::numbers::pi), 1e-15);
}

TEST(SpectralDensity, IntegratesToVariance) {
  const auto p = small_params(64);
  const SpectralDensity f(make_kernel(p));
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double e) { return f(e); }, -std::numbers::pi, std::numbers::pi, 12, 1e-13);
  EXPECT_NEAR(integral / exact_gamma(0, p), 1.0, 1e-6);
}

TEST(SpectralDensity, FourierInversionRecoversCovariance) {
  // The density is a trigonometric polynomial of degree <= cutoff, so an
  // N-point periodic trapezoid rule with N > 2 * cutoff + k is exact.
  for (auto shape : {KernelShape::OneSided, KernelShape::Symmetric}) {
    const auto p = small_params(40, shape);
    const SpectralDensity f(make_kernel(p));
    const int N = 512;
    for (int k = 0; k <= 10; ++k) {
      double s = 0;
      for (int j = 0; j < N; ++j) {
        const double eta = -std::numbers::pi + 2 * std::numbers::pi * j / N;
        s += std::cos(k * eta) * f(eta);
      }
      s *= 2 * std::numbers::pi / N;
      EXPECT_NEAR(s, exact_gamma(k, p), 1e-6 * exact_gamma(0, p)) << k;
    }
  }
}

TEST(SpectralDensity, Nonnegative) {
  const auto p = small_params(1000);
  const SpectralDensity f(make_kernel(p));
  for (int j = 0; j <= 200; ++j) EXPECT_GE(f(-std::numbers::pi + j * std::numbers::pi / 100), 0.0);
}

TEST(LimitSpectralDensity, ValueAtOneForThreeQuarters) {
  const double D = 2 * std::tgamma(0.5) * std::cos(std::numbers::pi / 4);
  EXPECT_NEAR(D, 2.50663, 1e-5);
  EXPECT_NEAR(limit_spectral_density(1.0, 0.75), 1 / D, 1e-14);
  EXPECT_NEAR(limit_spectral_density(1.0, 0.75), 0.39894, 1e-5);
}

TEST(LimitSpectralDensity, EvenAndSingularAtZero) {
  for (double h : {0.6, 0.75, 0.9}) EXPECT_EQ(limit_spectral_density(0.3, h), limit_spectral_density(-0.3, h));
  EXPECT_THROW(limit_spectral_density(0.0, 0.75), SingularityError);
}

TEST(LimitSpectralDensity, RescaledSpectrumConverges) {
  // lambda = 1 makes the limit exactly |eta|^{1-2H}/D.
  const auto p = EnvParams::calibrated(0.75, 100000, XiDist::StandardGaussian, KernelShape::OneSided, 1.0);
  const double n = 65536.0;
  const double rescaled = std::pow(n, p.alpha() - 0.5) * spectral_density(1.0 / std::sqrt(n), p) / std::sqrt(n);
  EXPECT_NEAR(rescaled / limit_spectral_density(1.0, 0.75), 1.0, 0.1);
}

TEST(EnvParams, ValidationNamesConstraint) {
  EnvParams p;
  p.hurst = 0.3;
  try {
    p.validate();
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("(1/2,1)"), std::string::npos);
  }
}

TEST(EnvParams, ParseRoundTrip) {
  for (auto d : {XiDist::StandardGaussian, XiDist::Rademacher}) EXPECT_EQ(parse_xi_dist(to_string(d)), d);
  for (auto s : {KernelShape::OneSided, KernelShape::Symmetric, KernelShape::Point})
    EXPECT_EQ(parse_kernel_shape(to_string(s)), s);
  for (auto r : {Psi0Rule::Unit, Psi0Rule::ZetaCorrected}) EXPECT_EQ(parse_psi0_rule(to_string(r)), r);
  EXPECT_THROW(parse_xi_dist("cauchy"), DomainError);
}
