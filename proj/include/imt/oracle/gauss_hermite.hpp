#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "imt/error.hpp"

namespace imt::oracle {

/// Nodes and weights for ∫ f(t) exp(−t²/2) dt / √(2π) (probabilists' Hermite).
struct HermiteRule {
  std::vector<long double> nodes;
  std::vector<long double> weights;
};

/// Golub-Welsch: eigen-decomposition of the Jacobi matrix with off-diagonal √k.
inline HermiteRule hermite_rule(int n) {
  require(n >= 2, ErrorCode::DomainError, "Gauss-Hermite needs at least 2 nodes");
  using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  Mat j = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    j(k, k - 1) = std::sqrt(static_cast<long double>(k));
    j(k - 1, k) = j(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(j);
  HermiteRule r;
  for (int i = 0; i < n; ++i) {
    const long double v = eig.eigenvectors()(0, i);
    r.nodes.push_back(eig.eigenvalues()(i));
    r.weights.push_back(v * v);
  }
  return r;
}

/// E[f(X)] for X ~ N(mean, std). The rule is laid on the Gaussian tilted by
/// exp(growth·x²/2), the rate at which f is expected to grow, and the
/// likelihood ratio is carried in the weights. growth = 0 is the plain rule.
template <class F>
long double gaussian_expectation(F&& f, double mean, double std, double growth, int n = 160) {
  require(std > 0.0, ErrorCode::DomainError, "std must be positive");
  const long double s2 = static_cast<long double>(std) * std;
  const long double shrink = 1.0L - growth * s2;
  require(shrink > 0.0L, ErrorCode::DomainError, "expectation diverges for this growth rate");
  const long double centre = mean / shrink;
  const long double width = std / std::sqrt(shrink);
  static thread_local int cached_n = 0;
  static thread_local HermiteRule rule;
  if (cached_n != n) {
    rule = hermite_rule(n);
    cached_n = n;
  }
  long double total = 0.0L;
  for (int i = 0; i < n; ++i) {
    const long double x = centre + width * rule.nodes[i];
    const long double zp = (x - mean) / std;
    const long double zq = rule.nodes[i];
    const long double ratio = (width / std) * std::exp(-(zp * zp - zq * zq) / 2);
    total += rule.weights[i] * ratio * f(x);
  }
  return total;
}

}  // namespace imt::oracle
