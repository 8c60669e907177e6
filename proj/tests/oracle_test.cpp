#include <cmath>

#include <boost/math/constants/constants.hpp>
#include <gtest/gtest.h>

#include "imt/oracle/fpt_grid.hpp"
#include "imt/oracle/gauss_hermite.hpp"
#include "imt/oracle/siegert.hpp"
#include "imt/oracle/unit_ou_mc.hpp"
#include "support.hpp"

// Checks of the reference implementations against each other and against
// closed forms, independent of the series code.

namespace {

using namespace imt;
using imt::testing::rel_err;

TEST(HermiteRule, IntegratesGaussianMomentsExactly) {
  const auto r = oracle::hermite_rule(40);
  long double double_factorial = 1;
  for (int n = 0; n <= 20; n += 2) {
    if (n > 0) double_factorial *= n - 1;
    long double s = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], n);
    EXPECT_NEAR(static_cast<double>(s / double_factorial), 1.0, 1e-12) << "n = " << n;
  }
}

TEST(HermiteRule, TiltedRuleHandlesGaussianGrowth) {
  // E[exp(g X²/2)] for X ~ N(m, s) has a closed form.
  const double m = 1.5, s = 0.4, g = 2.0;
  const double shrink = 1 - g * s * s;
  const double exact = std::exp(g * m * m / (2 * shrink)) / std::sqrt(shrink);
  const double q = static_cast<double>(oracle::gaussian_expectation(
      [g](long double x) { return std::exp(g * x * x / 2); }, m, s, g));
  EXPECT_LT(rel_err(q, exact), 1e-12);
  EXPECT_THROW(oracle::gaussian_expectation([](long double) { return 1.0L; }, 0.0, 1.0, 1.0), Error);
}

TEST(Siegert, MeanPassageAgreesWithGridSolver) {
  for (auto [S, x0] : std::vector<std::pair<double, double>>{{0.0, -3.0}, {2.0, 0.5}, {-2.0, -4.0}}) {
    const auto g = oracle::grid_tau_moments(S, x0);
    EXPECT_LT(rel_err(oracle::siegert_tau1(S, x0), g[1]), 1e-9);
    EXPECT_LT(rel_err(oracle::siegert_tau2(S, x0), g[2]), 1e-9);
  }
}

TEST(Siegert, Phi1SlopeAtOrigin) {
  // φ1' = exp(z²/2)G(z) and the kernel at 0 is √(π/2).
  const double h = 1e-5;
  const double slope = static_cast<double>(
      (oracle::quadrature_phi1(h) - oracle::quadrature_phi1(-h)) / (2 * h));
  EXPECT_NEAR(slope, std::sqrt(boost::math::constants::half_pi<double>()), 1e-8);
}

TEST(Siegert, TwoBranchesOfPhi2Meet) {
  const auto left = oracle::quadrature_phi12(-1e-3);
  const auto right = oracle::quadrature_phi12(1e-3);
  EXPECT_NEAR(static_cast<double>(left.second), static_cast<double>(-right.second),
              1e-5 * std::abs(static_cast<double>(right.second)) + 1e-12);
}

TEST(GridSolver, RejectsStartAboveBoundary) { EXPECT_THROW(oracle::grid_tau_moments(0.0, 1.0), Error); }

TEST(UnitMonteCarlo, ShortPassageFromNearTheBoundary) {
  const auto mc = oracle::unit_ou_passage_moments(-3.0, -5.0, 20000, 0.02, 4);
  const double exact = oracle::siegert_tau1(-3.0, -5.0);
  EXPECT_LT(std::abs(mc.tau1.value - exact), 3 * mc.tau1.std_error);
  EXPECT_EQ(mc.trials, 20000u);
}

TEST(UnitMonteCarlo, ReproducibleAcrossWorkerCounts) {
  const auto a = oracle::unit_ou_passage_moments(0.0, -1.0, 10000, 0.05, 8, 1);
  const auto b = oracle::unit_ou_passage_moments(0.0, -1.0, 10000, 0.05, 8, 3);
  EXPECT_EQ(a.tau1.value, b.tau1.value);
  EXPECT_EQ(a.tau2.value, b.tau2.value);
}

}  // namespace
