#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "imt/error.hpp"
#include "imt/precision.hpp"
#include "imt/series.hpp"

namespace imt {

/// dx = (μ − x)/θ dt + σ dw.
struct OuParams {
  double mu = 0.0;
  double theta = 1.0;
  double sigma = std::sqrt(2.0);

  void validate() const {
    require(std::isfinite(mu), ErrorCode::DomainError, "OU mean must be finite");
    require(theta > 0.0 && std::isfinite(theta), ErrorCode::DomainError,
            "OU time constant must be positive");
    require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::DomainError,
            "OU diffusion amplitude must be positive");
  }

  /// Space scale mapping this process onto the unit one (θ = 1, σ = √2).
  double alpha() const { return std::sqrt(2.0 / (theta * sigma * sigma)); }
};

namespace detail {

inline void check_order(int k) {
  require(k >= 1 && k <= series::kMaxOrder, ErrorCode::DomainError,
          "phi order must be 1, 2 or 3, got " + std::to_string(k));
}

inline void check_argument(double z, const SeriesControl& ctl) {
  require(std::isfinite(z), ErrorCode::DomainError, "phi argument must be finite");
  require(std::abs(z) <= ctl.max_abs_argument, ErrorCode::DomainError,
          "|z| = " + std::to_string(std::abs(z)) + " exceeds the series envelope " +
              std::to_string(ctl.max_abs_argument));
}

/// φ_1..φ_kmax at z in working type Real; entry 0 is φ_0 = 1.
template <class Real>
std::optional<std::array<series::SeriesSum<Real>, 4>> phi_point(double z, int k_max,
                                                                const SeriesControl& ctl) {
  auto& table = series::PhiCoefficients<Real>::cached(ctl.rho2_corruption);
  std::array<series::SeriesSum<Real>, 4> out{};
  out[0] = {Real(1), Real(1), 1};
  const int start = series::growth_start(std::abs(z), 1);
  for (int k = 1; k <= k_max; ++k) {
    series::PowerMoments<Real> powers{Real(z)};
    auto coef = [&](int n) -> const Real& {
      table.ensure(n);
      return table(k, n);
    };
    auto r = series::sum_series<Real>(coef, powers, ctl, 1, ctl.max_terms, start,
                                      table.representable_limit());
    if (!r) return std::nullopt;
    out[k] = *r;
  }
  return out;
}

/// Unit-process FPT moments 1..3 from φ values at the boundary (s) and start (x).
template <class T>
std::array<T, 4> tau_from_phi(const std::array<T, 4>& s, const std::array<T, 4>& x) {
  std::array<T, 4> tau{};
  tau[0] = T(1);
  tau[1] = s[1] - x[1];
  tau[2] = 2 * s[1] * s[1] - s[2] - 2 * s[1] * x[1] + x[2];
  tau[3] = 6 * s[1] * s[1] * s[1] - 6 * s[1] * s[2] + s[3] - 6 * s[1] * s[1] * x[1] +
           3 * s[2] * x[1] + 3 * s[1] * x[2] - x[3];
  return tau;
}

/// Largest term magnitude entering each formula of tau_from_phi.
template <class T>
std::array<T, 4> tau_part_bound(const std::array<T, 4>& s, const std::array<T, 4>& x) {
  using std::abs;
  auto mx = [](std::initializer_list<T> v) {
    T m(0);
    for (const T& e : v) {
      const T a = abs(e);
      if (a > m) m = a;
    }
    return m;
  };
  std::array<T, 4> b{};
  b[0] = T(1);
  b[1] = mx({s[1], x[1]});
  b[2] = mx({2 * s[1] * s[1], s[2], 2 * s[1] * x[1], x[2]});
  b[3] = mx({6 * s[1] * s[1] * s[1], 6 * s[1] * s[2], s[3], 6 * s[1] * s[1] * x[1],
             3 * s[2] * x[1], 3 * s[1] * x[2], x[3]});
  return b;
}

}  // namespace detail

/// φ_k(z) for k ∈ {1, 2, 3}.
inline double phi_k(double z, int k, const SeriesControl& ctl = {}) {
  ctl.validate();
  detail::check_order(k);
  detail::check_argument(z, ctl);
  const int required = ctl.required_digits();
  return precision::escalate<double>([&](auto tag, double& needed) -> std::optional<double> {
    using Real = typename decltype(tag)::type;
    auto r = detail::phi_point<Real>(z, k, ctl);
    if (!r) return std::nullopt;
    const auto& s = (*r)[k];
    if (!precision::enough_digits<Real>(s.lost_digits(), required, needed)) return std::nullopt;
    return static_cast<double>(s.value);
  });
}

/// First three FPT moments of the unit OU process (μ = 0, θ = 1, σ = √2)
/// started at x0 and absorbed at S. Entry 0 is 1.
inline std::array<double, 4> tau_moments_unit(double S, double x0, int highest,
                                              const SeriesControl& ctl = {}) {
  ctl.validate();
  require(highest >= 1 && highest <= 3, ErrorCode::DomainError,
          "moment order must be 1, 2 or 3");
  require(x0 <= S, ErrorCode::OrderingError, "start must lie below the boundary");
  detail::check_argument(S, ctl);
  detail::check_argument(x0, ctl);
  if (x0 == S) return {1.0, 0.0, 0.0, 0.0};
  const int required = ctl.required_digits();
  return precision::escalate<std::array<double, 4>>(
      [&](auto tag, double& needed) -> std::optional<std::array<double, 4>> {
        using Real = typename decltype(tag)::type;
        auto rs = detail::phi_point<Real>(S, highest, ctl);
        if (!rs) return std::nullopt;
        auto rx = detail::phi_point<Real>(x0, highest, ctl);
        if (!rx) return std::nullopt;
        std::array<Real, 4> s{}, x{};
        double lost = 0.0;
        for (int k = 0; k <= highest; ++k) {
          s[k] = (*rs)[k].value;
          x[k] = (*rx)[k].value;
          lost = std::max({lost, (*rs)[k].lost_digits(), (*rx)[k].lost_digits()});
        }
        const auto tau = detail::tau_from_phi(s, x);
        const auto bound = detail::tau_part_bound(s, x);
        std::array<double, 4> out{1.0, 0.0, 0.0, 0.0};
        for (int m = 1; m <= highest; ++m) {
          const double total = lost + precision::lost_digits(bound[m], tau[m]);
          if (!precision::enough_digits<Real>(total, required, needed)) return std::nullopt;
          out[m] = static_cast<double>(tau[m]);
        }
        return out;
      });
}

/// m-th FPT moment of the unit OU process, m ∈ {1, 2, 3}.
inline double tau_m_unit(double S, double x0, int m, const SeriesControl& ctl = {}) {
  return tau_moments_unit(S, x0, m, ctl)[m];
}

/// m-th FPT moment for a zero-mean OU process with time constant θ and
/// diffusion σ: θ^m · τ̃_m(αS, αx0).
inline double tau_m_scaled(double S, double x0, int m, const OuParams& ou,
                           const SeriesControl& ctl = {}) {
  ou.validate();
  require(ou.mu == 0.0, ErrorCode::DomainError,
          "tau_m_scaled needs a zero-mean process; translate coordinates first");
  const double a = ou.alpha();
  return std::pow(ou.theta, m) * tau_m_unit(a * S, a * x0, m, ctl);
}

}  // namespace imt
