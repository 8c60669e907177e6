#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "imt/threshold_dist.hpp"
#include "support.hpp"

namespace {

using namespace imt;
using imt::testing::rel_err;

double binomial(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

// E[(aX + b)^n] from the moments of X.
std::vector<double> transformed(const MomentTable& t, double a, double b, int N) {
  std::vector<double> out(N + 1, 0.0);
  for (int n = 0; n <= N; ++n) {
    for (int k = 0; k <= n; ++k) {
      out[n] += binomial(n, k) * std::pow(a, k) * std::pow(b, n - k) * t.raw[k];
    }
  }
  return out;
}

// Raw moments by quadrature of the EP density.
long double ep_moment_by_quadrature(const dist::ExpPower& e, int n) {
  boost::math::quadrature::tanh_sinh<long double> ts;
  auto density = [&](long double x) {
    return std::exp(-std::pow(std::abs((x - e.mean) / e.scale), static_cast<long double>(e.kappa)));
  };
  const long double lo = e.mean - 12 * e.scale, hi = e.mean + 12 * e.scale;
  const long double norm = ts.integrate(density, lo, e.mean) + ts.integrate(density, e.mean, hi);
  auto moment = [&](long double x) { return std::pow(x, n) * density(x); };
  return (ts.integrate(moment, lo, e.mean) + ts.integrate(moment, e.mean, hi)) / norm;
}

TEST(RawMoments, ConstantPowers) {
  const auto t = raw_moments(dist::Constant{1.3}, 20);
  for (int n = 0; n <= 20; ++n) EXPECT_LT(rel_err(t.raw[n], std::pow(1.3, n)), 1e-15);
}

TEST(RawMoments, GaussianRecurrence) {
  // m_n = μ m_{n−1} + (n − 1) s² m_{n−2}.
  const double mu = 0.7, s = 0.3;
  const auto t = raw_moments(dist::Gaussian{mu, s}, 30);
  std::vector<long double> m{1.0L, mu};
  for (int n = 2; n <= 30; ++n) m.push_back(mu * m[n - 1] + (n - 1) * s * s * m[n - 2]);
  for (int n = 0; n <= 30; ++n) EXPECT_LT(rel_err(t.raw[n], static_cast<double>(m[n])), 1e-13);
}

TEST(RawMoments, ExpPowerTwoIsGaussian) {
  const double mu = -0.4, s = 0.25;
  const auto ep = raw_moments(ep_from_std(mu, s, 2.0), 40);
  const auto g = raw_moments(dist::Gaussian{mu, s}, 40);
  for (int n = 1; n <= 40; ++n) {
    EXPECT_LT(std::abs(ep.raw[n] - g.raw[n]), 1e-12 * std::max(1e-300, std::abs(g.raw[n])))
        << "n = " << n;
  }
}

TEST(RawMoments, ExpPowerThreeMatchesDensityQuadrature) {
  const auto e = ep_from_std(1.2, 0.05, 3.0);
  const auto t = raw_moments(e, 4);
  for (int n : {2, 4}) {
    EXPECT_LT(rel_err(t.raw[n], static_cast<double>(ep_moment_by_quadrature(e, n))), 1e-10);
  }
}

TEST(RawMoments, TwoPointMixture) {
  const dist::TwoPoint d{-1.0, 2.5, 0.3};
  const auto t = raw_moments(d, 12);
  for (int n = 0; n <= 12; ++n) {
    EXPECT_LT(rel_err(t.raw[n], 0.3 * std::pow(-1.0, n) + 0.7 * std::pow(2.5, n)), 1e-14);
  }
}

TEST(RawMoments, VarianceConsistency) {
  for (const ThresholdDist& d : std::vector<ThresholdDist>{
           dist::Gaussian{1.0, 0.1}, ep_from_std(1.0, 0.1, 3.0), dist::TwoPoint{0.0, 1.0, 0.2}}) {
    const auto t = raw_moments(d, 4);
    EXPECT_GE(t.variance(), 0.0);
    EXPECT_LT(rel_err(t.variance(), variance(d)), 1e-12);
  }
}

TEST(RawMoments, OrderCapIsEnforced) {
  try {
    raw_moments(dist::Gaussian{0.0, 1.0}, 201);
    FAIL() << "expected OrderTooHigh";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OrderTooHigh);
  }
}

TEST(Affine, IdentityAndGaussianClosure) {
  const ThresholdDist g = dist::Gaussian{1.2, 0.05};
  const auto same = std::get<dist::Gaussian>(affine(g, 1.0, 0.0));
  EXPECT_EQ(same.mean, 1.2);
  EXPECT_EQ(same.std, 0.05);
  const auto moved = std::get<dist::Gaussian>(affine(g, -3.0, 0.5));
  EXPECT_DOUBLE_EQ(moved.mean, -3.0 * 1.2 + 0.5);
  EXPECT_DOUBLE_EQ(moved.std, 0.15);
  EXPECT_TRUE(std::holds_alternative<dist::Constant>(affine(dist::Constant{2.0}, 4.0, 1.0)));
  const auto ep = std::get<dist::ExpPower>(affine(ep_from_std(1.0, 0.1, 2.4), 2.0, 0.0));
  EXPECT_EQ(ep.kappa, 2.4);
}

TEST(Affine, RawMomentsTransformBinomially) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 20; ++i) {
    const double a = u(rng) + (u(rng) > 0 ? 0.1 : -0.1), b = u(rng);
    const std::vector<ThresholdDist> family{dist::Constant{u(rng)}, dist::Gaussian{u(rng), 0.3},
                                            ep_from_std(u(rng), 0.2, 3.0),
                                            dist::TwoPoint{-1.0, 1.5, 0.4}};
    for (const auto& d : family) {
      const auto expect = transformed(raw_moments(d, 8), a, b, 8);
      const auto got = raw_moments(affine(d, a, b), 8);
      for (int n = 1; n <= 8; ++n) {
        EXPECT_NEAR(got.raw[n], expect[n], 1e-11 * (1 + std::abs(expect[n])));
      }
    }
  }
}

TEST(Sampler, ConstantIsConstant) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample(dist::Constant{1.1}, rng), 1.1);
}

TEST(Sampler, MomentsAgreeWithinFourStandardErrors) {
  const std::vector<ThresholdDist> family{dist::Gaussian{1.2, 0.05}, ep_from_std(1.2, 0.05, 3.0),
                                          ep_from_std(1.2, 0.05, 2.4),
                                          dist::TwoPoint{1.0, 1.3, 0.25}};
  constexpr int kDraws = 1000000;
  for (const auto& d : family) {
    std::mt19937_64 rng(77);
    const auto t = raw_moments(d, 8);
    std::vector<long double> sum(5, 0.0L);
    for (int i = 0; i < kDraws; ++i) {
      const long double x = sample(d, rng);
      long double p = 1;
      for (int n = 1; n <= 4; ++n) {
        p *= x;
        sum[n] += p;
      }
    }
    for (int n = 1; n <= 4; ++n) {
      const double mean = static_cast<double>(sum[n] / kDraws);
      const double se = std::sqrt((t.raw[2 * n] - t.raw[n] * t.raw[n]) / kDraws);
      EXPECT_LT(std::abs(mean - t.raw[n]), 4 * se) << family_name(d) << " n = " << n;
    }
  }
}

TEST(Sampler, ExpPowerThreeVarianceAndKurtosis) {
  const auto d = ep_from_std(0.0, 1.0, 3.0);
  std::mt19937_64 rng(123);
  long double s2 = 0, s4 = 0;
  constexpr int kDraws = 1000000;
  for (int i = 0; i < kDraws; ++i) {
    const long double x = sample(d, rng);
    s2 += x * x;
    s4 += x * x * x * x;
  }
  const double var = static_cast<double>(s2 / kDraws);
  EXPECT_LT(rel_err(var, 1.0), 0.01);
  EXPECT_LT(static_cast<double>(s4 / kDraws) / (var * var) - 3.0, 0.0);
  const auto t = raw_moments(d, 4);
  EXPECT_LT(t.raw[4] / (t.raw[2] * t.raw[2]) - 3.0, 0.0);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

TEST(Sampler, AffineNaturalityByKolmogorovSmirnov) {
  constexpr std::size_t kDraws = 100000;
  const double a = -7.5, b = 3.0;
  // Critical value at significance 1e-3 for two samples of equal size.
  const double critical = 1.949 * std::sqrt(2.0 / kDraws);
  for (const ThresholdDist& d :
       std::vector<ThresholdDist>{dist::Gaussian{1.2, 0.05}, ep_from_std(1.2, 0.05, 3.0)}) {
    std::mt19937_64 r1(10), r2(20);
    const auto image = affine(d, a, b);
    std::vector<double> x(kDraws), y(kDraws);
    for (auto& v : x) v = sample(image, r1);
    for (auto& v : y) v = a * sample(d, r2) + b;
    EXPECT_LT(ks_statistic(x, y), critical) << family_name(d);
  }
}

TEST(Sampler, RejectionCountsDrawsBelowFloor) {
  std::mt19937_64 rng(4);
  RejectionStats stats;
  for (int i = 0; i < 10000; ++i) EXPECT_GT(sample_above(dist::Gaussian{0.0, 1.0}, 0.0, rng, stats), 0.0);
  EXPECT_EQ(stats.accepted, 10000u);
  EXPECT_NEAR(stats.rate(), 0.5, 0.02);
  EXPECT_TRUE(stats.flagged());
}

TEST(Tails, LighterAsShapeGrows) {
  // P(|X − m| > 3 std) = Q(1/κ, (3 std / scale)^κ) at matched variance.
  double previous = 1.0;
  for (double kappa : {2.0, 2.4, 3.0}) {
    const auto e = ep_from_std(0.0, 1.0, kappa);
    const double tail = boost::math::gamma_q(1.0 / kappa, std::pow(3.0 / e.scale, kappa));
    EXPECT_LT(tail, previous) << "kappa = " << kappa;
    previous = tail;
  }
}

TEST(Fit, RecoversGaussianParameters) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(1.0, 0.05);
  std::vector<double> s(10000);
  for (auto& v : s) v = normal(rng);
  const auto g = std::get<dist::Gaussian>(fit(s, FitFamily::Gaussian));
  EXPECT_NEAR(g.mean, 1.0, 0.002);
  EXPECT_LT(rel_err(g.std, 0.05), 0.02);
}

TEST(Fit, ExpPowerMatchesSampleVariance) {
  std::mt19937_64 rng(8);
  std::vector<double> s(5000);
  for (auto& v : s) v = sample(ep_from_std(1.2, 0.04, 3.0), rng);
  const auto d = fit(s, FitFamily::ExpPower, 3.0);
  double m = 0;
  for (double v : s) m += v;
  m /= s.size();
  double ss = 0;
  for (double v : s) ss += (v - m) * (v - m);
  EXPECT_LT(rel_err(variance(d), ss / (s.size() - 1)), 1e-12);
  EXPECT_EQ(std::get<dist::ExpPower>(d).kappa, 3.0);
}

TEST(Fit, RejectsDegenerateAndShortInput) {
  try {
    fit(std::vector<double>(50, 1.1), FitFamily::Gaussian);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateVariance);
  }
  try {
    fit(std::vector<double>(29, 1.1), FitFamily::Gaussian);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(Validate, RejectsMalformedLaws) {
  EXPECT_THROW(validate(dist::Gaussian{1.0, -0.1}), Error);
  EXPECT_THROW(validate(dist::ExpPower{1.0, 0.1, 1.5}), Error);
  EXPECT_THROW(validate(dist::TwoPoint{1.0, 0.5, 0.5}), Error);
  EXPECT_THROW(validate(dist::TwoPoint{0.0, 1.0, 1.0}), Error);
  EXPECT_NO_THROW(validate(dist::Constant{1.0}));
}

}  // namespace
