#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/bernoulli.hpp>

#include "imt/error.hpp"
#include "imt/precision.hpp"

namespace imt {

/// Neumaier-compensated accumulator.
template <class Real>
class CompensatedSum {
 public:
  void add(const Real& v) {
    using std::abs;
    const Real t = sum_ + v;
    if (abs(sum_) >= abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  Real value() const { return sum_ + comp_; }

 private:
  Real sum_{0};
  Real comp_{0};
};

/// log Γ(n/2) for integer n ≥ 1, built from Γ(1/2) = √π and Γ(1) = 1 with
/// Γ(x+1) = xΓ(x).
template <class Real = long double>
Real log_gamma_half(int n) {
  using std::log;
  using std::sqrt;
  require(n >= 1, ErrorCode::DomainError, "log_gamma_half needs n >= 1");
  const bool odd = (n % 2) == 1;
  Real acc = odd ? log(sqrt(precision::pi<Real>())) : Real(0);
  for (int m = odd ? 1 : 2; m + 2 <= n; m += 2) acc += log(Real(m) / 2);
  return acc;
}

/// Table of log Γ(n/2) for n = 0..n_max (entry 0 unused).
template <class Real = long double>
std::vector<Real> log_gamma_half_table(int n_max) {
  using std::log;
  std::vector<Real> table(static_cast<std::size_t>(n_max) + 1, Real(0));
  if (n_max >= 1) table[1] = log_gamma_half<Real>(1);
  if (n_max >= 2) table[2] = Real(0);
  for (int n = 3; n <= n_max; ++n) table[n] = table[n - 2] + log(Real(n - 2) / 2);
  return table;
}

/// Γ(n/2) for integer n ≥ 1. Overflows to +inf past n = 343.
inline double gamma_half_integer(int n) {
  require(n >= 1, ErrorCode::DomainError, "gamma_half_integer needs n >= 1");
  if (n > 300) return std::exp(static_cast<double>(log_gamma_half<long double>(n)));
  const bool odd = (n % 2) == 1;
  long double g = odd ? std::sqrt(boost::math::constants::pi<long double>()) : 1.0L;
  for (int m = odd ? 1 : 2; m + 2 <= n; m += 2) g *= static_cast<long double>(m) / 2;
  return static_cast<double>(g);
}

namespace detail {

// Below this argument the asymptotic series cannot reach full precision;
// shift upward with the recurrence first.
template <class Real>
Real asymptotic_threshold() {
  return Real(std::max(10.0, 0.4 * precision::digits10<Real> + 2.0));
}

}  // namespace detail

/// Digamma ψ(x) for x > 0: shift to large argument with ψ(x) = ψ(x+1) − 1/x,
/// then the Bernoulli asymptotic expansion.
template <class Real = long double>
Real digamma(Real x) {
  using std::abs;
  using std::log;
  require(x > 0 && precision::is_finite(x), ErrorCode::DomainError,
          "digamma needs a finite positive argument");
  const Real x_min = detail::asymptotic_threshold<Real>();
  Real shift_sum(0);
  while (x < x_min) {
    shift_sum += Real(1) / x;
    x += 1;
  }
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real inv_x2 = Real(1) / (x * x);
  Real result = log(x) - Real(1) / (2 * x);
  Real power = inv_x2;
  Real previous = std::numeric_limits<Real>::max();
  for (int k = 1; k < 500; ++k) {
    const Real term = boost::math::bernoulli_b2n<Real>(k) / (2 * k) * power;
    if (abs(term) >= previous) break;
    result -= term;
    if (abs(term) < eps * abs(result)) break;
    previous = abs(term);
    power *= inv_x2;
  }
  return result - shift_sum;
}

/// Trigamma ψ'(x) for x > 0, same strategy as digamma.
template <class Real = long double>
Real trigamma(Real x) {
  using std::abs;
  require(x > 0 && precision::is_finite(x), ErrorCode::DomainError,
          "trigamma needs a finite positive argument");
  const Real x_min = detail::asymptotic_threshold<Real>();
  Real shift_sum(0);
  while (x < x_min) {
    shift_sum += Real(1) / (x * x);
    x += 1;
  }
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real inv_x = Real(1) / x;
  const Real inv_x2 = inv_x * inv_x;
  Real result = inv_x + inv_x2 / 2;
  Real power = inv_x2 * inv_x;
  Real previous = std::numeric_limits<Real>::max();
  for (int k = 1; k < 500; ++k) {
    const Real term = boost::math::bernoulli_b2n<Real>(k) * power;
    if (abs(term) >= previous) break;
    result += term;
    if (abs(term) < eps * abs(result)) break;
    previous = abs(term);
    power *= inv_x2;
  }
  return result + shift_sum;
}

inline double digamma(double x) { return static_cast<double>(digamma<long double>(x)); }
inline double trigamma(double x) { return static_cast<double>(trigamma<long double>(x)); }

}  // namespace imt
