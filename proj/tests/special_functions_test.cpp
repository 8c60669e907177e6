#include <cmath>
#include <random>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "imt/special_functions.hpp"

namespace {

using namespace imt;

constexpr double kPi = boost::math::constants::pi<double>();
constexpr double kEuler = boost::math::constants::euler<double>();

// ψ(x) = ∫_0^1 (1 − t^(x−1)) / (1 − t) dt − γ.
long double digamma_by_quadrature(long double x) {
  boost::math::quadrature::tanh_sinh<long double> ts;
  auto f = [x](long double t) -> long double {
    if (t >= 1.0L) return x - 1;
    return (1 - std::pow(t, x - 1)) / (1 - t);
  };
  return ts.integrate(f, 0.0L, 1.0L) - boost::math::constants::euler<long double>();
}

TEST(GammaHalfInteger, TextbookValues) {
  EXPECT_NEAR(gamma_half_integer(1), std::sqrt(kPi), 1e-15);
  EXPECT_DOUBLE_EQ(gamma_half_integer(2), 1.0);
  EXPECT_NEAR(gamma_half_integer(3), std::sqrt(kPi) / 2, 1e-15);
  EXPECT_DOUBLE_EQ(gamma_half_integer(4), 1.0);
  EXPECT_DOUBLE_EQ(gamma_half_integer(6), 2.0);
}

TEST(GammaHalfInteger, MatchesLibraryGamma) {
  for (int n = 1; n <= 340; ++n) {
    const double expected = std::tgamma(n / 2.0);
    EXPECT_NEAR(gamma_half_integer(n) / expected, 1.0, 1e-13) << "n = " << n;
  }
}

TEST(GammaHalfInteger, LogTableMatchesLgamma) {
  const auto table = log_gamma_half_table<long double>(2000);
  for (int n = 1; n <= 2000; n += 7) {
    EXPECT_NEAR(static_cast<double>(table[n]), std::lgamma(n / 2.0),
                1e-12 * std::max(1.0, std::abs(std::lgamma(n / 2.0))))
        << "n = " << n;
    EXPECT_NEAR(static_cast<double>(log_gamma_half<long double>(n)),
                static_cast<double>(table[n]), 1e-10);
  }
}

TEST(GammaHalfInteger, RejectsNonpositive) {
  EXPECT_THROW(gamma_half_integer(0), Error);
  EXPECT_THROW(gamma_half_integer(-3), Error);
}

TEST(Digamma, TextbookValues) {
  EXPECT_NEAR(digamma(1.0), -kEuler, 1e-15);
  EXPECT_NEAR(digamma(0.5), -kEuler - 2 * std::log(2.0), 1e-15);
  EXPECT_NEAR(trigamma(1.0), kPi * kPi / 6, 1e-15);
  EXPECT_NEAR(trigamma(0.5), kPi * kPi / 2, 1e-14);
}

TEST(Digamma, AgreesWithIntegralDefinition) {
  for (long double x : {10.5L, 0.75L, 3.0L, 27.25L}) {
    const long double q = digamma_by_quadrature(x);
    EXPECT_NEAR(static_cast<double>(digamma<long double>(x) / q), 1.0, 1e-12) << "x = " << x;
  }
}

TEST(Digamma, HalfIntegerClosedForm) {
  // ψ(n + 1/2) = −γ − 2 ln 2 + Σ_{k=1}^n 2/(2k − 1).
  long double partial = 0;
  for (int n = 1; n <= 60; ++n) {
    partial += 2.0L / (2 * n - 1);
    const long double expected =
        -boost::math::constants::euler<long double>() - 2 * std::log(2.0L) + partial;
    EXPECT_NEAR(static_cast<double>(digamma<long double>(n + 0.5L)),
                static_cast<double>(expected), 1e-15 * std::abs(static_cast<double>(expected)));
  }
}

TEST(Digamma, RecurrenceHoldsAtRandomArguments) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 200.0);
  for (int i = 0; i < 200; ++i) {
    const long double x = u(rng);
    EXPECT_NEAR(static_cast<double>(digamma<long double>(x + 1) - digamma<long double>(x) - 1 / x),
                0.0, 1e-15 * (1 + static_cast<double>(1 / x)));
    EXPECT_NEAR(
        static_cast<double>(trigamma<long double>(x) - trigamma<long double>(x + 1) - 1 / (x * x)),
        0.0, 1e-15 * (1 + static_cast<double>(1 / (x * x))));
  }
}

TEST(Digamma, RejectsNonpositive) {
  EXPECT_THROW(digamma(0.0), Error);
  EXPECT_THROW(digamma(-1.5), Error);
  EXPECT_THROW(trigamma(0.0), Error);
}

TEST(CompensatedSum, RecoversLostLowOrderBits) {
  CompensatedSum<double> s;
  s.add(1.0);
  for (int i = 0; i < 1000000; ++i) s.add(1e-16);
  EXPECT_NEAR(s.value(), 1.0 + 1e-10, 1e-22);
}

}  // namespace
