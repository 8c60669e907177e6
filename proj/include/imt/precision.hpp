#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "imt/error.hpp"

namespace imt::precision {

namespace mp = boost::multiprecision;

using Float50 = mp::number<mp::cpp_bin_float<50>, mp::et_off>;
using Float100 = mp::number<mp::cpp_bin_float<100>, mp::et_off>;
using Float200 = mp::number<mp::cpp_bin_float<200>, mp::et_off>;
using Float400 = mp::number<mp::cpp_bin_float<400>, mp::et_off>;

template <class Real>
inline constexpr int digits10 = std::numeric_limits<Real>::digits10;

template <class Real>
Real pi() {
  return boost::math::constants::pi<Real>();
}

template <class Real>
bool is_finite(const Real& x) {
  using std::isfinite;
  using boost::multiprecision::isfinite;
  return isfinite(x);
}

/// Decimal digits lost when `value` is assembled from parts no larger than
/// `largest_part` in magnitude. Zero parts summing to zero lose nothing.
template <class Real>
double lost_digits(const Real& largest_part, const Real& value) {
  using std::abs;
  using std::log10;
  if (largest_part == 0) return 0.0;
  if (value == 0) return std::numeric_limits<double>::infinity();
  const double ratio = static_cast<double>(log10(abs(largest_part) / abs(value)));
  return ratio > 0.0 ? ratio : 0.0;
}

/// Whether a computation in `Real` that lost `lost` digits still carries
/// `required` significant digits.
template <class Real>
bool precision_suffices(double lost, int required) {
  return static_cast<double>(digits10<Real>) - lost >= static_cast<double>(required);
}

/// Runs `attempt` in successively wider floating types. `attempt` receives a
/// std::type_identity<Real> tag and a double& through which it may report the
/// decimal digits it found necessary; it returns std::optional<Result>, empty
/// to ask for a wider type. Types too narrow for a reported need are skipped.
template <class Result, class Attempt>
Result escalate(Attempt&& attempt) {
  double needed = 0.0;
  auto run = [&](auto tag) -> std::optional<Result> {
    using Real = typename decltype(tag)::type;
    if (static_cast<double>(digits10<Real>) < needed) return std::nullopt;
    return attempt(tag, needed);
  };
  if (auto r = run(std::type_identity<long double>{})) return *r;
  if (auto r = run(std::type_identity<Float50>{})) return *r;
  if (auto r = run(std::type_identity<Float100>{})) return *r;
  if (auto r = run(std::type_identity<Float200>{})) return *r;
  if (auto r = run(std::type_identity<Float400>{})) return *r;
  throw Error(ErrorCode::PrecisionExhausted,
              "cancellation exceeds the widest available floating type");
}

/// Records that a computation needs `lost + required` digits, then reports
/// whether `Real` provides them.
template <class Real>
bool enough_digits(double lost, int required, double& needed) {
  needed = std::max(needed, lost + static_cast<double>(required));
  return precision_suffices<Real>(lost, required);
}

}  // namespace imt::precision
