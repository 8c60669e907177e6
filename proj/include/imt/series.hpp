#pragma once

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "imt/error.hpp"
#include "imt/precision.hpp"
#include "imt/special_functions.hpp"

namespace imt {

/// Truncation policy for the φ series and every moment series built on it.
struct SeriesControl {
  double rel_tol = 1e-14;
  int max_terms = 4000;
  /// Largest |z| accepted by the point evaluations.
  double max_abs_argument = 40.0;
  /// Highest raw moment a distribution may be asked for.
  int moment_cap = 8192;
  /// Test hook: multiplies ρ(n,2) by (1 + rho2_corruption). Zero in production.
  double rho2_corruption = 0.0;

  void validate() const {
    require(rel_tol > 0.0 && rel_tol < 1e-3, ErrorCode::ConfigError,
            "series rel_tol must lie in (0, 1e-3)");
    require(max_terms >= 50, ErrorCode::ConfigError, "series max_terms must be >= 50");
    require(max_abs_argument > 0.0, ErrorCode::ConfigError,
            "series max_abs_argument must be positive");
    require(moment_cap >= 1, ErrorCode::ConfigError, "series moment_cap must be >= 1");
  }

  /// Significant digits a result must retain after cancellation.
  int required_digits() const {
    return static_cast<int>(std::ceil(-std::log10(rel_tol))) + 2;
  }
};

namespace series {

/// Highest φ order the coefficient tables carry.
inline constexpr int kMaxOrder = 3;

/// Coefficients a(k, n) of z^n in φ_k(z) for k = 0..3, with φ_0 ≡ 1:
///   a(k, n) = 2^-k (√2)^n Γ(n/2) ρ(n, k) / n!
///   ρ(n,1) = 1, ρ(n,2) = 2[ψ(n/2) − ψ(1)],
///   ρ(n,3) = 3[(ψ(n/2) − ψ(1))² + ψ'(n/2) − ψ'(1)].
/// Tables grow on demand and are cached per thread.
template <class Real>
class PhiCoefficients {
 public:
  explicit PhiCoefficients(double rho2_corruption) : corruption_(rho2_corruption) {
    for (auto& c : coef_) c.push_back(Real(0));
    coef_[0][0] = Real(1);
    psi1_ = digamma<Real>(Real(1));
    trigamma1_ = trigamma<Real>(Real(1));
    psi_[0] = digamma<Real>(Real(1) / 2);
    psi_[1] = psi1_;
    tri_[0] = trigamma<Real>(Real(1) / 2);
    tri_[1] = trigamma1_;
    lgh_[0] = log_gamma_half<Real>(1);
    lgh_[1] = Real(0);
  }

  static PhiCoefficients& cached(double rho2_corruption) {
    thread_local std::map<double, std::unique_ptr<PhiCoefficients>> cache;
    auto& slot = cache[rho2_corruption];
    if (!slot) slot = std::make_unique<PhiCoefficients>(rho2_corruption);
    return *slot;
  }

  void ensure(int n_max) {
    using std::exp;
    using std::log;
    while (filled_ < n_max) {
      const int n = filled_ + 1;
      const int parity = (n + 1) % 2;  // slot 0 for odd n, 1 for even n
      if (n > 2) {
        const Real step = Real(n - 2) / 2;
        lgh_[parity] += log(step);
        psi_[parity] += Real(1) / step;
        tri_[parity] -= Real(1) / (step * step);
      }
      log_factorial_ += log(Real(n));
      const Real log_base =
          Real(n) / 2 * log(Real(2)) + lgh_[parity] - log_factorial_;
      const Real base = exp(log_base);
      if (base == 0 && representable_limit_ == INT_MAX) representable_limit_ = n;
      const Real d = psi_[parity] - psi1_;
      const Real rho2 = 2 * d * (Real(1) + Real(corruption_));
      const Real rho3 = 3 * (d * d + tri_[parity] - trigamma1_);
      coef_[0].push_back(Real(0));
      coef_[1].push_back(base / 2);
      coef_[2].push_back(base * rho2 / 4);
      coef_[3].push_back(base * rho3 / 8);
      filled_ = n;
    }
  }

  const Real& operator()(int k, int n) const { return coef_[k][n]; }
  int filled() const { return filled_; }

  /// First index whose coefficient underflowed the working type.
  int representable_limit() const { return representable_limit_; }

 private:
  double corruption_;
  std::array<std::vector<Real>, kMaxOrder + 1> coef_;
  int filled_ = 0;
  int representable_limit_ = INT_MAX;
  Real log_factorial_{0};
  Real psi1_, trigamma1_;
  std::array<Real, 2> psi_, tri_, lgh_;
};

/// Coefficients of z^n in the product φ_{k1}(z)···φ_{kp}(z), formed by
/// repeated Cauchy products and extended on demand.
template <class Real>
class ProductCoefficients {
 public:
  ProductCoefficients(PhiCoefficients<Real>& table, std::vector<int> orders)
      : table_(table), orders_(std::move(orders)), partial_(orders_.size()) {
    require(!orders_.empty(), ErrorCode::DomainError, "product needs at least one factor");
    for (int k : orders_) {
      require(k >= 0 && k <= kMaxOrder, ErrorCode::DomainError,
              "phi order must lie in 0..3");
    }
  }

  const Real& operator()(int n) {
    extend(n);
    return partial_.back()[n];
  }

  /// Number of non-constant factors; the product's series starts at this power.
  int lowest_power() const {
    return static_cast<int>(std::count_if(orders_.begin(), orders_.end(),
                                          [](int k) { return k > 0; }));
  }

  int factors() const { return static_cast<int>(orders_.size()); }
  int representable_limit() const { return table_.representable_limit(); }

 private:
  void extend(int n) {
    if (static_cast<int>(partial_[0].size()) > n) return;
    table_.ensure(n);
    for (int i = static_cast<int>(partial_[0].size()); i <= n; ++i) {
      partial_[0].push_back(table_(orders_[0], i));
      for (std::size_t f = 1; f < orders_.size(); ++f) {
        CompensatedSum<Real> acc;
        const int k = orders_[f];
        for (int j = 0; j <= i; ++j) {
          const Real& b = table_(k, i - j);
          if (b != 0) acc.add(partial_[f - 1][j] * b);
        }
        partial_[f].push_back(acc.value());
      }
    }
  }

  PhiCoefficients<Real>& table_;
  std::vector<int> orders_;
  std::vector<std::vector<Real>> partial_;
};

/// Raw moments z^n of a point mass, extended on demand.
template <class Real>
class PowerMoments {
 public:
  explicit PowerMoments(const Real& z) : z_(z) { values_.push_back(Real(1)); }
  const Real& operator()(int n) {
    while (static_cast<int>(values_.size()) <= n) values_.push_back(values_.back() * z_);
    return values_[n];
  }

 private:
  Real z_;
  std::vector<Real> values_;
};

template <class Real>
struct SeriesSum {
  Real value;
  Real largest_term;
  int terms;

  double lost_digits() const { return precision::lost_digits(largest_term, value); }
};

/// Sums Σ_n coef(n)·moment(n). Converged once three consecutive two-term
/// blocks fall below rel_tol·|sum|. Declared divergent once block magnitudes
/// rise for 25 consecutive blocks (50 terms) past `growth_start`.
/// Returns nullopt when the working type overflows or underflows, asking the
/// caller to retry in a wider type.
template <class Real, class Coef, class Moment>
std::optional<SeriesSum<Real>> sum_series(Coef&& coef, Moment&& moment,
                                          const SeriesControl& ctl, int first_power,
                                          int cap, int growth_start,
                                          int representable_limit) {
  using std::abs;
  constexpr bool widest_range = !std::is_same_v<Real, long double>;
  CompensatedSum<Real> sum;
  Real largest(0);
  Real previous_block(-1);
  Real pending(0);
  int small_blocks = 0;
  int growing_blocks = 0;
  const Real tol(ctl.rel_tol);
  for (int n = first_power; n <= cap; ++n) {
    if (n >= representable_limit) return std::nullopt;
    const Real term = coef(n) * moment(n);
    if (!precision::is_finite(term)) {
      if (widest_range) {
        throw Error(ErrorCode::SeriesDiverged,
                    "series term overflowed at n = " + std::to_string(n));
      }
      return std::nullopt;
    }
    sum.add(term);
    const Real magnitude = abs(term);
    if (magnitude > largest) largest = magnitude;
    if ((n - first_power) % 2 == 0) {
      pending = magnitude;
      continue;
    }
    const Real block = pending + magnitude;
    const Real current = sum.value();
    small_blocks = (block <= tol * abs(current)) ? small_blocks + 1 : 0;
    if (small_blocks >= 3) return SeriesSum<Real>{current, largest, n - first_power + 1};
    if (n >= growth_start && previous_block >= 0 && block > previous_block) {
      if (++growing_blocks >= 25) {
        throw Error(ErrorCode::SeriesDiverged,
                    "series terms grew for 50 consecutive terms past n = " +
                        std::to_string(growth_start));
      }
    } else {
      growing_blocks = 0;
    }
    previous_block = block;
  }
  throw Error(ErrorCode::SeriesDidNotConverge,
              "series not converged within " + std::to_string(cap) + " terms");
}

/// Index past which persistent growth counts as divergence, for a product of
/// `factors` φ series evaluated on arguments of typical size `radius`.
/// Twice the index where the terms peak.
inline int growth_start(double radius, int factors) {
  const double peak = 2.0 * std::max(1, factors) * radius * radius;
  return static_cast<int>(std::min(1e9, std::max(100.0, peak + 20.0)));
}

}  // namespace series
}  // namespace imt
