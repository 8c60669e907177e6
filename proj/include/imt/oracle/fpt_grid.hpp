#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "imt/error.hpp"

// First-passage moments of the unit OU process from the backward equations
//   τ_n'' − x τ_n' = −n τ_{n−1},  τ_n(S) = 0,  τ_0 = 1,
// solved as iterated integrals on a uniform grid with trapezoid sums and one
// Richardson step.

namespace imt::oracle {

namespace detail {

/// τ_1..τ_3 at x0 on a grid of spacing h that contains x0 and S as nodes.
inline std::array<long double, 4> grid_moments(double S, double x0, long double h,
                                               long double left) {
  const auto below = static_cast<long>(std::llround((x0 - left) / h));
  const auto span = static_cast<long>(std::llround((S - x0) / h));
  const long n = below + span + 1;
  std::vector<long double> x(n), prev(n, 1.0L), cur(n), inner(n);
  for (long i = 0; i < n; ++i) x[i] = x0 + (i - below) * h;
  std::array<long double, 4> out{1.0L, 0.0L, 0.0L, 0.0L};
  for (int order = 1; order <= 3; ++order) {
    // inner(y) = ∫_{left}^{y} τ_{n−1}(u) exp(−u²/2) du, tail below `left` neglected.
    inner[0] = 0.0L;
    for (long i = 1; i < n; ++i) {
      const long double a = prev[i - 1] * std::exp(-x[i - 1] * x[i - 1] / 2);
      const long double b = prev[i] * std::exp(-x[i] * x[i] / 2);
      inner[i] = inner[i - 1] + h * (a + b) / 2;
    }
    cur[n - 1] = 0.0L;
    for (long i = n - 2; i >= 0; --i) {
      const long double a = std::exp(x[i] * x[i] / 2) * inner[i];
      const long double b = std::exp(x[i + 1] * x[i + 1] / 2) * inner[i + 1];
      cur[i] = cur[i + 1] + order * h * (a + b) / 2;
    }
    out[order] = cur[below];
    prev.swap(cur);
  }
  return out;
}

}  // namespace detail

/// τ_1..τ_3 from x0 to S; entry 0 is 1. `steps` sets the grid resolution
/// over [x0, S].
inline std::array<double, 4> grid_tau_moments(double S, double x0, long steps = 20000) {
  require(x0 < S, ErrorCode::OrderingError, "start must lie below the boundary");
  const long double h = (static_cast<long double>(S) - x0) / steps;
  const long double floor_target = std::min<long double>(x0 - 4.0L, -14.0L);
  const long double left = x0 - std::ceil((x0 - floor_target) / h) * h;
  const auto coarse = detail::grid_moments(S, x0, h, left);
  const auto fine = detail::grid_moments(S, x0, h / 2, left);
  std::array<double, 4> out{1.0, 0.0, 0.0, 0.0};
  for (int m = 1; m <= 3; ++m) {
    out[m] = static_cast<double>((4 * fine[m] - coarse[m]) / 3);
  }
  return out;
}

}  // namespace imt::oracle
