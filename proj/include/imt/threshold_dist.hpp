#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "imt/error.hpp"
#include "imt/precision.hpp"
#include "imt/special_functions.hpp"

namespace imt {

namespace dist {

struct Constant {
  double value = 0.0;
};

struct Gaussian {
  double mean = 0.0;
  double std = 1.0;
};

/// Density ∝ exp(−|(x − mean)/scale|^kappa).
struct ExpPower {
  double mean = 0.0;
  double scale = 1.0;
  double kappa = 2.0;
};

/// Mass p_low at `low`, the rest at `high`. Not a physical threshold law;
/// it exists to check the averaging over the boundary against mixtures of
/// constant-boundary results.
struct TwoPoint {
  double low = 0.0;
  double high = 1.0;
  double p_low = 0.5;
};

}  // namespace dist

using ThresholdDist = std::variant<dist::Constant, dist::Gaussian, dist::ExpPower, dist::TwoPoint>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// Variance of EP[κ] with unit scale: Γ(3/κ)/Γ(1/κ).
inline double ep_unit_variance(double kappa) {
  return std::exp(std::lgamma(3.0 / kappa) - std::lgamma(1.0 / kappa));
}

/// EP[κ] with the given mean and standard deviation.
inline dist::ExpPower ep_from_std(double mean, double std, double kappa) {
  require(std > 0.0, ErrorCode::DomainError, "EP standard deviation must be positive");
  require(kappa >= 2.0, ErrorCode::DomainError, "EP shape must be >= 2");
  return {mean, std / std::sqrt(ep_unit_variance(kappa)), kappa};
}

inline void validate(const ThresholdDist& d) {
  std::visit(Overloaded{
                 [](const dist::Constant& c) {
                   require(std::isfinite(c.value), ErrorCode::DomainError,
                           "constant threshold must be finite");
                 },
                 [](const dist::Gaussian& g) {
                   require(std::isfinite(g.mean), ErrorCode::DomainError,
                           "Gaussian mean must be finite");
                   require(g.std > 0.0 && std::isfinite(g.std), ErrorCode::DomainError,
                           "Gaussian std must be positive");
                 },
                 [](const dist::ExpPower& e) {
                   require(std::isfinite(e.mean), ErrorCode::DomainError,
                           "EP mean must be finite");
                   require(e.scale > 0.0 && std::isfinite(e.scale), ErrorCode::DomainError,
                           "EP scale must be positive");
                   require(e.kappa >= 2.0 && std::isfinite(e.kappa), ErrorCode::DomainError,
                           "EP shape must be >= 2");
                 },
                 [](const dist::TwoPoint& t) {
                   require(std::isfinite(t.low) && std::isfinite(t.high) && t.low < t.high,
                           ErrorCode::DomainError, "two-point law needs finite low < high");
                   require(t.p_low > 0.0 && t.p_low < 1.0, ErrorCode::DomainError,
                           "two-point weight must lie in (0, 1)");
                 },
             },
             d);
}

inline double mean(const ThresholdDist& d) {
  return std::visit(Overloaded{
                        [](const dist::Constant& c) { return c.value; },
                        [](const dist::Gaussian& g) { return g.mean; },
                        [](const dist::ExpPower& e) { return e.mean; },
                        [](const dist::TwoPoint& t) {
                          return t.p_low * t.low + (1.0 - t.p_low) * t.high;
                        },
                    },
                    d);
}

inline double stddev(const ThresholdDist& d) {
  return std::visit(Overloaded{
                        [](const dist::Constant&) { return 0.0; },
                        [](const dist::Gaussian& g) { return g.std; },
                        [](const dist::ExpPower& e) {
                          return e.scale * std::sqrt(ep_unit_variance(e.kappa));
                        },
                        [](const dist::TwoPoint& t) {
                          return (t.high - t.low) * std::sqrt(t.p_low * (1.0 - t.p_low));
                        },
                    },
                    d);
}

inline double variance(const ThresholdDist& d) {
  const double s = stddev(d);
  return s * s;
}

inline bool is_constant(const ThresholdDist& d) {
  return std::holds_alternative<dist::Constant>(d);
}

/// Human-readable family label, e.g. "Constant", "Gaussian", "EP[3]".
inline std::string family_name(const ThresholdDist& d) {
  return std::visit(Overloaded{
                        [](const dist::Constant&) { return std::string("Constant"); },
                        [](const dist::Gaussian&) { return std::string("Gaussian"); },
                        [](const dist::ExpPower& e) {
                          char buf[32];
                          std::snprintf(buf, sizeof buf, "EP[%g]", e.kappa);
                          return std::string(buf);
                        },
                        [](const dist::TwoPoint&) { return std::string("TwoPoint"); },
                    },
                    d);
}

/// Distribution of a·X + b.
inline ThresholdDist affine(const ThresholdDist& d, double a, double b) {
  require(a != 0.0 && std::isfinite(a) && std::isfinite(b), ErrorCode::DomainError,
          "affine map needs a finite nonzero gain");
  return std::visit(Overloaded{
                        [&](const dist::Constant& c) -> ThresholdDist {
                          return dist::Constant{a * c.value + b};
                        },
                        [&](const dist::Gaussian& g) -> ThresholdDist {
                          return dist::Gaussian{a * g.mean + b, std::abs(a) * g.std};
                        },
                        [&](const dist::ExpPower& e) -> ThresholdDist {
                          return dist::ExpPower{a * e.mean + b, std::abs(a) * e.scale, e.kappa};
                        },
                        [&](const dist::TwoPoint& t) -> ThresholdDist {
                          if (a > 0.0) return dist::TwoPoint{a * t.low + b, a * t.high + b, t.p_low};
                          return dist::TwoPoint{a * t.high + b, a * t.low + b, 1.0 - t.p_low};
                        },
                    },
                    d);
}

/// Where the mass of X, reweighted by exp(p·x²/2), concentrates: |x*| plus
/// four standard deviations. The terms of a moment series for a p-fold φ
/// product peak near index p·radius². Falls back to |mean| + 4·std when the
/// reweighted law is not normalizable.
inline double tilted_radius(const ThresholdDist& d, int p) {
  const double m = mean(d);
  const double sd = stddev(d);
  const double plain = std::abs(m) + 4.0 * sd;
  if (p <= 0 || sd == 0.0) return plain;
  if (const auto* g = std::get_if<dist::Gaussian>(&d)) {
    const double shrink = 1.0 - p * g->std * g->std;
    if (shrink <= 0.0) return plain;
    return std::abs(m) / shrink + 4.0 * g->std / std::sqrt(shrink);
  }
  if (const auto* t = std::get_if<dist::TwoPoint>(&d)) {
    return std::max(std::abs(t->low), std::abs(t->high));
  }
  const auto& e = std::get<dist::ExpPower>(d);
  if (e.kappa <= 2.0) return tilted_radius(dist::Gaussian{m, sd}, p);
  const double reach = std::pow(p * std::pow(e.scale, e.kappa) / e.kappa, 1.0 / (e.kappa - 2.0));
  const double span = std::min(1e4, std::abs(m) + 2.0 * reach + 10.0 * e.scale);
  double best_x = m;
  double best_h = -std::numeric_limits<double>::infinity();
  constexpr int kSteps = 4000;
  for (int i = 0; i <= kSteps; ++i) {
    const double x = m - span + 2.0 * span * i / kSteps;
    const double h = 0.5 * p * x * x - std::pow(std::abs(x - m) / e.scale, e.kappa);
    if (h > best_h) {
      best_h = h;
      best_x = x;
    }
  }
  return std::max(plain, std::abs(best_x) + 4.0 * sd);
}

namespace detail {

/// Γ(x) for arguments arriving in increasing order. Arguments sharing a
/// fractional part are reached from the previous one by Γ(x+1) = xΓ(x), so
/// only one full evaluation is paid per residue class.
template <class Real>
class GammaLadder {
 public:
  Real operator()(const Real& x) {
    using std::floor;
    const double xd = static_cast<double>(x);
    const auto key = static_cast<long long>(std::llround((xd - std::floor(xd)) * 1e9));
    auto it = rungs_.find(key);
    if (it != rungs_.end()) {
      const Real steps = x - it->second.x;
      const Real k = floor(steps + Real(0.5));
      using std::abs;
      if (k >= 0 && abs(steps - k) < Real(1e-6)) {
        Real g = it->second.gamma;
        Real arg = it->second.x;
        for (long i = 0; i < static_cast<long>(k); ++i) {
          g *= arg;
          arg += 1;
        }
        it->second = {x, g};
        return g;
      }
    }
    const Real g = boost::math::tgamma(x);
    rungs_[key] = {x, g};
    return g;
  }

 private:
  struct Rung {
    Real x;
    Real gamma;
  };
  std::map<long long, Rung> rungs_;
};

}  // namespace detail

/// Raw moments E[X^n] in working type Real, produced on demand up to `cap`.
/// Every contribution to a raw moment shares the sign of mean^n, so the
/// construction itself loses no digits to cancellation.
template <class Real>
class MomentSequence {
 public:
  MomentSequence(const ThresholdDist& d, int cap) : dist_(d), cap_(cap) {
    validate(d);
    raw_.push_back(Real(1));
    central_.push_back(Real(1));
    mean_ = Real(imt::mean(d));
    std::visit(Overloaded{
                   [&](const dist::Constant&) { kind_ = Kind::Point; },
                   [&](const dist::Gaussian& g) {
                     kind_ = Kind::Normal;
                     var_ = Real(g.std) * Real(g.std);
                   },
                   [&](const dist::ExpPower& e) {
                     kind_ = Kind::Power;
                     scale_ = Real(e.scale);
                     kappa_ = Real(e.kappa);
                     gamma_base_ = boost::math::tgamma(Real(1) / kappa_);
                   },
                   [&](const dist::TwoPoint& t) {
                     kind_ = Kind::Points;
                     low_ = Real(t.low);
                     high_ = Real(t.high);
                     p_low_ = Real(t.p_low);
                     low_power_ = high_power_ = Real(1);
                   },
               },
               d);
  }

  const Real& operator()(int n) {
    if (n > cap_) {
      throw Error(ErrorCode::MomentTableTooShort,
                  "raw moment of order " + std::to_string(n) + " exceeds the cap " +
                      std::to_string(cap_));
    }
    while (static_cast<int>(raw_.size()) <= n) extend();
    return raw_[n];
  }

  /// See tilted_radius.
  double radius(int factors) const { return tilted_radius(dist_, factors); }
  int cap() const { return cap_; }

 private:
  enum class Kind { Point, Normal, Power, Points };

  void extend() {
    const int n = static_cast<int>(raw_.size());
    switch (kind_) {
      case Kind::Point:
        raw_.push_back(raw_.back() * mean_);
        break;
      case Kind::Points:
        low_power_ *= low_;
        high_power_ *= high_;
        raw_.push_back(p_low_ * low_power_ + (1 - p_low_) * high_power_);
        break;
      case Kind::Normal: {
        Real next = mean_ * raw_[n - 1];
        if (n >= 2) next += Real(n - 1) * var_ * raw_[n - 2];
        raw_.push_back(next);
        break;
      }
      case Kind::Power: {
        // Central moments: zero for odd order, scale^j Γ((j+1)/κ)/Γ(1/κ) for even j.
        if (n % 2 == 0) {
          central_.push_back(Real(0));
          const Real ratio = ladder_(Real(n + 1) / kappa_) / gamma_base_;
          central_.push_back(ratio);
          scale_power_.push_back(scale_power_.empty() ? scale_ * scale_
                                                      : scale_power_.back() * scale_ * scale_);
        }
        // Binomial expansion around the mean, accumulated from the top term down.
        if (mean_powers_.empty()) mean_powers_.push_back(Real(1));
        while (static_cast<int>(mean_powers_.size()) <= n) {
          mean_powers_.push_back(mean_powers_.back() * mean_);
        }
        CompensatedSum<Real> acc;
        Real binom(1);
        for (int j = 0; j <= n; j += 2) {
          const Real central_j =
              j == 0 ? Real(1) : central_[j] * scale_power_[static_cast<std::size_t>(j / 2 - 1)];
          acc.add(binom * mean_powers_[n - j] * central_j);
          binom *= Real(n - j) * Real(n - j - 1) / (Real(j + 1) * Real(j + 2));
        }
        raw_.push_back(acc.value());
        break;
      }
    }
  }

  ThresholdDist dist_;
  int cap_;
  Kind kind_ = Kind::Point;
  Real mean_{0}, var_{0}, scale_{1}, kappa_{2}, gamma_base_{1};
  Real low_{0}, high_{0}, p_low_{0}, low_power_{1}, high_power_{1};
  std::vector<Real> raw_;
  std::vector<Real> central_;
  std::vector<Real> scale_power_;
  std::vector<Real> mean_powers_;
  detail::GammaLadder<Real> ladder_;
};

/// Raw moments E[X^n], n = 1..N, as doubles. Entry 0 is 1.
struct MomentTable {
  std::vector<double> raw;
  int order() const { return static_cast<int>(raw.size()) - 1; }
  double variance() const { return raw[2] - raw[1] * raw[1]; }
};

inline MomentTable raw_moments(const ThresholdDist& d, int N, int cap = 200) {
  require(N >= 1, ErrorCode::DomainError, "moment order must be >= 1");
  require(N <= cap, ErrorCode::OrderTooHigh,
          "moment order " + std::to_string(N) + " exceeds the cap " + std::to_string(cap));
  MomentSequence<precision::Float50> seq(d, cap);
  MomentTable t;
  t.raw.reserve(static_cast<std::size_t>(N) + 1);
  for (int n = 0; n <= N; ++n) t.raw.push_back(static_cast<double>(seq(n)));
  return t;
}

/// One draw from the distribution.
template <class Urbg>
double sample(const ThresholdDist& d, Urbg& rng) {
  return std::visit(Overloaded{
                        [](const dist::Constant& c) { return c.value; },
                        [&](const dist::Gaussian& g) {
                          std::normal_distribution<double> normal(g.mean, g.std);
                          return normal(rng);
                        },
                        [&](const dist::ExpPower& e) {
                          std::gamma_distribution<double> gamma(1.0 / e.kappa, 1.0);
                          std::bernoulli_distribution coin(0.5);
                          const double magnitude = std::pow(gamma(rng), 1.0 / e.kappa);
                          const double sign = coin(rng) ? 1.0 : -1.0;
                          return e.mean + e.scale * sign * magnitude;
                        },
                        [&](const dist::TwoPoint& t) {
                          std::bernoulli_distribution coin(t.p_low);
                          return coin(rng) ? t.low : t.high;
                        },
                    },
                    d);
}

struct RejectionStats {
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;

  double rate() const {
    const auto total = accepted + rejected;
    return total == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(total);
  }
  /// Configurations rejecting more than one draw in a thousand are suspect.
  bool flagged() const { return rate() > 1e-3; }

  RejectionStats& operator+=(const RejectionStats& o) {
    accepted += o.accepted;
    rejected += o.rejected;
    return *this;
  }
};

/// Draws until the value exceeds `floor`, counting the re-draws.
template <class Urbg>
double sample_above(const ThresholdDist& d, double floor, Urbg& rng, RejectionStats& stats,
                    int max_attempts = 1000000) {
  for (int i = 0; i < max_attempts; ++i) {
    const double v = sample(d, rng);
    if (v > floor) {
      ++stats.accepted;
      return v;
    }
    ++stats.rejected;
  }
  throw Error(ErrorCode::DomainError, "threshold distribution lies almost entirely below v_l");
}

enum class FitFamily { Gaussian, ExpPower };

/// Variance-matched fit. For ExpPower the shape is the caller's choice.
inline ThresholdDist fit(const std::vector<double>& samples, FitFamily family,
                         double kappa = 3.0) {
  require(samples.size() >= 30, ErrorCode::InsufficientData,
          "fitting needs at least 30 samples, got " + std::to_string(samples.size()));
  const double n = static_cast<double>(samples.size());
  const double m = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - m) * (v - m);
  const double var = ss / (n - 1.0);
  require(var > 0.0 && var > 1e-24 * m * m, ErrorCode::DegenerateVariance,
          "samples have zero spread");
  if (family == FitFamily::Gaussian) return dist::Gaussian{m, std::sqrt(var)};
  return ep_from_std(m, std::sqrt(var), kappa);
}

}  // namespace imt
