#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <limits>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

// Quadrature references for the unit OU process dx = −x dt + √2 dw, built
// from the classical integral representations only.

namespace imt::oracle {

namespace detail {

inline long double integrate(auto&& f, long double a, long double b) {
  using Gk = boost::math::quadrature::gauss_kronrod<long double, 31>;
  return Gk::integrate(f, a, b, 12, 1e-15L);
}

}  // namespace detail

/// G(u) = ∫_{−∞}^u exp(−w²/2) dw.
inline long double gaussian_integral(long double u) {
  return std::sqrt(boost::math::constants::half_pi<long double>()) * std::erfc(-u / std::sqrt(2.0L));
}

/// exp(y²/2)·G(y): the density of the mean first-passage time in its upper limit.
inline long double siegert_kernel(long double y) {
  return std::exp(y * y / 2) * gaussian_integral(y);
}

/// H(y) = ∫_{−∞}^y G(u)² exp(u²/2) du.
inline long double second_kernel(long double y) {
  auto f = [](long double u) -> long double {
    if (u < -60) return 0.0L;  // below 2e-782
    const long double g = gaussian_integral(u);
    return g * g * std::exp(u * u / 2);
  };
  const long double ninf = -std::numeric_limits<long double>::infinity();
  if (y <= 0) return detail::integrate(f, ninf, y);
  static const long double at_zero = detail::integrate(f, ninf, 0.0L);
  return at_zero + detail::integrate(f, 0.0L, y);
}

/// Mean first-passage time from x0 up to S.
inline double siegert_tau1(double S, double x0) {
  return static_cast<double>(detail::integrate(siegert_kernel, x0, S));
}

/// Second moment: τ1² + 2 ∫_{x0}^S exp(y²/2) H(y) dy.
inline double siegert_tau2(double S, double x0) {
  const long double t1 = detail::integrate(siegert_kernel, x0, S);
  auto f = [](long double y) { return std::exp(y * y / 2) * second_kernel(y); };
  return static_cast<double>(t1 * t1 + 2 * detail::integrate(f, x0, S));
}

/// φ1(z) = ∫_0^z exp(y²/2) G(y) dy.
inline long double quadrature_phi1(long double z) {
  return detail::integrate(siegert_kernel, 0.0L, z);
}

/// (φ1(z), φ2(z)). With D = Gφ1 − H one has D' = exp(−y²/2)φ1 and
/// φ2' = 2 exp(y²/2) D. For z > 0 the system (φ1, D, φ2) is integrated
/// forward from 0 with a 7/8 Runge-Kutta pair; for z < 0, where D is tiny,
/// D is taken pointwise from quadrature and φ2 by an outer quadrature.
inline std::pair<long double, long double> quadrature_phi12(long double z) {
  if (z == 0) return {0.0L, 0.0L};
  if (z < 0) {
    auto d = [](long double y) {
      return gaussian_integral(y) * detail::integrate(siegert_kernel, 0.0L, y) - second_kernel(y);
    };
    auto f = [&](long double y) { return 2 * std::exp(y * y / 2) * d(y); };
    return {quadrature_phi1(z), detail::integrate(f, 0.0L, z)};
  }
  namespace ode = boost::numeric::odeint;
  using State = std::array<long double, 3>;
  State y{0.0L, -second_kernel(0.0L), 0.0L};
  auto rhs = [](const State& s, State& d, long double t) {
    const long double e = std::exp(t * t / 2);
    d[0] = e * gaussian_integral(t);
    d[1] = s[0] / e;
    d[2] = 2 * e * s[1];
  };
  auto stepper =
      ode::make_controlled(1e-16L, 1e-16L, ode::runge_kutta_fehlberg78<State, long double>());
  ode::integrate_adaptive(stepper, rhs, y, 0.0L, z, 1e-3L);
  return {y[0], y[2]};
}

/// φ2(z) = ∫_0^z 2[exp(y²/2) G(y) φ1(y) − exp(y²/2) H(y)] dy.
inline long double quadrature_phi2(long double z) { return quadrature_phi12(z).second; }

}  // namespace imt::oracle
