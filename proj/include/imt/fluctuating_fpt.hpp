#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "imt/circuit.hpp"
#include "imt/error.hpp"
#include "imt/noise.hpp"
#include "imt/parallel.hpp"
#include "imt/ou_fpt.hpp"
#include "imt/precision.hpp"
#include "imt/series.hpp"
#include "imt/threshold_dist.hpp"

namespace imt {

/// Discharge phase of the circuit as an OU process hitting a random boundary.
/// OU coordinates are x = v_i − μ; the series runs on α·x.
struct ReducedModel {
  OuParams ou;
  double alpha = 1.0;
  double x0 = 0.0;  ///< v_l − μ
  ThresholdDist boundary = dist::Constant{0.0};  ///< law of α(v_h − μ)

  double scaled_start() const { return alpha * x0; }
};

struct IsiMoments {
  double mean = 0.0;
  double raw2 = std::numeric_limits<double>::quiet_NaN();
  double raw3 = std::numeric_limits<double>::quiet_NaN();
  double variance = std::numeric_limits<double>::quiet_NaN();
  double cv = std::numeric_limits<double>::quiet_NaN();
  double firing_rate = 0.0;
  int highest = 1;
};

/// Fills variance, cv and firing rate from the raw moments.
inline IsiMoments finish_moments(double mean, double raw2, double raw3, int highest) {
  IsiMoments m;
  m.highest = highest;
  m.mean = mean;
  m.firing_rate = mean > 0.0 && std::isfinite(mean) ? 1.0 / mean : 0.0;
  if (highest >= 2) {
    m.raw2 = raw2;
    m.variance = raw2 - mean * mean;
    require(m.variance >= -1e-12 * raw2, ErrorCode::NegativeVarianceComputed,
            "second moment below the squared mean; series precision failed");
    m.variance = std::max(0.0, m.variance);
    m.cv = std::sqrt(m.variance) / mean;
  }
  if (highest >= 3) m.raw3 = raw3;
  return m;
}

/// Drift of the insulating-phase discharge: C dv_i/dt = drive − g_total·v_i.
struct DischargeDrift {
  double drive = 0.0;    ///< A
  double g_total = 0.0;  ///< S

  double mu() const { return drive / g_total; }
};

inline DischargeDrift discharge_drift(const ImtCircuit& c, double v_gs) {
  if (const auto* t = std::get_if<TransistorModel>(&c.series)) {
    return {t->current(v_gs), c.device.g_vi};
  }
  const double g_s = std::get<SeriesConductance>(c.series).g_s;
  return {g_s * c.v_dd, g_s + c.device.g_vi};
}

/// Noiseless time for v_i to climb from v_l to v_h; +inf if the fixed point
/// sits at or below v_h, zero when v_h ≤ v_l.
inline double deterministic_isi(const ImtCircuit& c, double v_gs, double v_h) {
  const auto drift = discharge_drift(c, v_gs);
  const double theta = c.C / drift.g_total;
  const double mu = drift.mu();
  if (v_h <= c.device.v_l) return 0.0;
  if (mu <= v_h) return std::numeric_limits<double>::infinity();
  return theta * std::log((mu - c.device.v_l) / (mu - v_h));
}

/// Upper edge of the threshold band used for the saturation check.
inline double threshold_upper_edge(const ThresholdDist& d) {
  return mean(d) + 4.0 * stddev(d);
}

/// OU reduction of the insulating phase with L = 0. The series noise voltage
/// drives a current g_vi·η into C, so σ = g_vi·σ_t/C.
inline ReducedModel circuit_to_ou(const ImtCircuit& c, double v_gs, const NoiseSpec& noise) {
  c.validate();
  noise.validate();
  require(noise.sigma_t > 0.0, ErrorCode::DomainError,
          "the OU reduction needs sigma_t > 0; use deterministic_isi for the noiseless case");
  if (const auto* t = std::get_if<TransistorModel>(&c.series)) {
    const double v_h_max = std::max(c.device.v_h_nominal, threshold_upper_edge(noise.threshold));
    const double overdrive = v_gs - t->v_t0;
    require(c.v_dd - v_h_max >= overdrive, ErrorCode::SaturationViolated,
            "transistor leaves saturation: v_o drops to " + std::to_string(c.v_dd - v_h_max) +
                " V below the overdrive " + std::to_string(overdrive) + " V");
  }
  const auto drift = discharge_drift(c, v_gs);
  ReducedModel m;
  m.ou.theta = c.C / drift.g_total;
  m.ou.mu = drift.mu();
  m.ou.sigma = c.device.g_vi * noise.physical_sigma() / c.C;
  m.ou.validate();
  m.alpha = m.ou.alpha();
  m.x0 = c.device.v_l - m.ou.mu;
  m.boundary = affine(noise.threshold, m.alpha, -m.alpha * m.ou.mu);
  return m;
}

namespace detail {

/// Expectations E[φ_{k1}(X)···φ_{kp}(X)] over one boundary law, sharing the
/// coefficient tables and the lazily built raw moments.
template <class Real>
class BoundaryExpectation {
 public:
  BoundaryExpectation(const ThresholdDist& d, const SeriesControl& ctl)
      : ctl_(ctl),
        table_(series::PhiCoefficients<Real>::cached(ctl.rho2_corruption)),
        moments_(d, ctl.moment_cap) {}

  std::optional<series::SeriesSum<Real>> operator()(const std::vector<int>& orders) {
    series::ProductCoefficients<Real> prod(table_, orders);
    const int factors = prod.lowest_power();
    const int cap = factors > 1 ? 2 * ctl_.max_terms : ctl_.max_terms;
    const double radius = moments_.radius(factors);
    const double peak = std::max(1, factors) * radius * radius;
    if (peak > cap) {
      throw Error(ErrorCode::SeriesDidNotConverge,
                  "series terms peak near n = " + std::to_string(static_cast<long>(peak)) +
                      ", beyond the cap of " + std::to_string(cap) + " terms");
    }
    auto coef = [&](int n) -> const Real& { return prod(n); };
    auto mom = [&](int n) -> const Real& { return moments_(n); };
    return series::sum_series<Real>(coef, mom, ctl_, prod.lowest_power(), cap,
                                    series::growth_start(radius, factors),
                                    prod.representable_limit());
  }

 private:
  const SeriesControl& ctl_;
  series::PhiCoefficients<Real>& table_;
  MomentSequence<Real> moments_;
};

inline void check_boundary(const ThresholdDist& d, const SeriesControl& ctl) {
  validate(d);
  require(std::abs(mean(d)) <= ctl.max_abs_argument, ErrorCode::DomainError,
          "boundary mean lies outside the series envelope");
}

template <class Real>
std::optional<std::array<Real, 4>> phi_values(double z, int k_max, const SeriesControl& ctl,
                                              double& lost) {
  auto r = phi_point<Real>(z, k_max, ctl);
  if (!r) return std::nullopt;
  std::array<Real, 4> v{Real(1), Real(0), Real(0), Real(0)};
  for (int k = 1; k <= k_max; ++k) {
    v[k] = (*r)[k].value;
    lost = std::max(lost, (*r)[k].lost_digits());
  }
  return v;
}

}  // namespace detail

/// E[φ_{k1}(X)···φ_{kp}(X)] for X with law `boundary`, orders in 0..3.
inline double expected_phi_product(const ThresholdDist& boundary, const std::vector<int>& orders,
                                   const SeriesControl& ctl = {}) {
  ctl.validate();
  detail::check_boundary(boundary, ctl);
  for (int k : orders) {
    require(k >= 0 && k <= series::kMaxOrder, ErrorCode::DomainError,
            "phi order must lie in 0..3");
  }
  const int required = ctl.required_digits();
  return precision::escalate<double>([&](auto tag, double& needed) -> std::optional<double> {
    using Real = typename decltype(tag)::type;
    detail::BoundaryExpectation<Real> expect(boundary, ctl);
    auto r = expect(orders);
    if (!r) return std::nullopt;
    if (!precision::enough_digits<Real>(r->lost_digits(), required, needed)) return std::nullopt;
    return static_cast<double>(r->value);
  });
}

inline double expected_phi(const ThresholdDist& boundary, int k, const SeriesControl& ctl = {}) {
  detail::check_order(k);
  return expected_phi_product(boundary, {k}, ctl);
}

inline double expected_phi_product(const ThresholdDist& boundary, int k1, int k2,
                                   const SeriesControl& ctl = {}) {
  return expected_phi_product(boundary, std::vector<int>{k1, k2}, ctl);
}

/// Unit-process FPT moments averaged over the boundary law, started at x0.
/// Entry m holds E[τ̃_m(X, x0)].
inline std::array<double, 4> expected_tau_unit(const ThresholdDist& boundary, double x0,
                                               int highest, const SeriesControl& ctl = {}) {
  ctl.validate();
  require(highest >= 1 && highest <= 3, ErrorCode::DomainError,
          "moment order must be 1, 2 or 3");
  if (const auto* c = std::get_if<dist::Constant>(&boundary)) {
    return tau_moments_unit(c->value, x0, highest, ctl);
  }
  detail::check_boundary(boundary, ctl);
  detail::check_argument(x0, ctl);
  const int required = ctl.required_digits();
  return precision::escalate<std::array<double, 4>>(
      [&](auto tag, double& needed) -> std::optional<std::array<double, 4>> {
        using Real = typename decltype(tag)::type;
        double lost = 0.0;
        auto xv = detail::phi_values<Real>(x0, highest, ctl, lost);
        if (!xv) return std::nullopt;
        const auto& x = *xv;
        detail::BoundaryExpectation<Real> expect(boundary, ctl);
        auto take = [&](std::vector<int> orders) -> std::optional<Real> {
          auto r = expect(orders);
          if (!r) return std::nullopt;
          lost = std::max(lost, r->lost_digits());
          return r->value;
        };
        using std::abs;
        auto largest = [](std::initializer_list<Real> parts) {
          Real m(0);
          for (const Real& p : parts) {
            if (abs(p) > m) m = abs(p);
          }
          return m;
        };
        std::array<Real, 4> tau{Real(1), Real(0), Real(0), Real(0)};
        std::array<double, 4> combo_lost{};
        const auto e1 = take({1});
        if (!e1) return std::nullopt;
        tau[1] = *e1 - x[1];
        combo_lost[1] = precision::lost_digits(largest({*e1, x[1]}), tau[1]);
        std::optional<Real> e11, e2;
        if (highest >= 2) {
          e11 = take({1, 1});
          e2 = take({2});
          if (!e11 || !e2) return std::nullopt;
          const Real p[] = {2 * *e11, *e2, 2 * *e1 * x[1], x[2]};
          tau[2] = p[0] - p[1] - p[2] + p[3];
          combo_lost[2] = precision::lost_digits(largest({p[0], p[1], p[2], p[3]}), tau[2]);
          const Real var = tau[2] - tau[1] * tau[1];
          combo_lost[2] = std::max(combo_lost[2],
                                   precision::lost_digits(abs(tau[2]), var));
        }
        if (highest >= 3) {
          const auto e111 = take({1, 1, 1});
          const auto e12 = take({1, 2});
          const auto e3 = take({3});
          if (!e111 || !e12 || !e3) return std::nullopt;
          const Real p[] = {6 * *e111,     6 * *e12,       *e3,  6 * *e11 * x[1],
                            3 * *e2 * x[1], 3 * *e1 * x[2], x[3]};
          tau[3] = p[0] - p[1] + p[2] - p[3] + p[4] + p[5] - p[6];
          combo_lost[3] =
              precision::lost_digits(largest({p[0], p[1], p[2], p[3], p[4], p[5], p[6]}), tau[3]);
        }
        std::array<double, 4> out{1.0, 0.0, 0.0, 0.0};
        for (int m = 1; m <= highest; ++m) {
          if (!precision::enough_digits<Real>(lost + combo_lost[m], required, needed)) {
            return std::nullopt;
          }
          out[m] = static_cast<double>(tau[m]);
        }
        return out;
      });
}

/// ISI moments of the reduced model: E[t^m] = θ^m E[τ̃_m(α(v_h − μ), α(v_l − μ))].
inline IsiMoments isi_moments_analytic(const ReducedModel& model, int highest,
                                       const SeriesControl& ctl = {}) {
  model.ou.validate();
  const auto tau = expected_tau_unit(model.boundary, model.scaled_start(), highest, ctl);
  const double th = model.ou.theta;
  return finish_moments(th * tau[1], th * th * tau[2], th * th * th * tau[3], highest);
}

/// ISI moments at one operating point. σ_t = 0 with a constant threshold uses
/// the closed-form crossing time; otherwise the OU reduction.
inline IsiMoments isi_moments_at(const ImtCircuit& c, double v_gs, const NoiseSpec& noise,
                                 int highest, const SeriesControl& ctl = {}) {
  if (noise.sigma_t == 0.0) {
    const auto* k = std::get_if<dist::Constant>(&noise.threshold);
    require(k != nullptr, ErrorCode::DomainError,
            "sigma_t = 0 is only supported with a constant threshold");
    const double t = deterministic_isi(c, v_gs, k->value);
    return finish_moments(t, t * t, t * t * t, highest);
  }
  return isi_moments_analytic(circuit_to_ou(c, v_gs, noise), highest, ctl);
}

enum class SweepStatus { Converged, Diverged, Failed };

inline const char* to_string(SweepStatus s) {
  switch (s) {
    case SweepStatus::Converged: return "converged";
    case SweepStatus::Diverged: return "diverged";
    case SweepStatus::Failed: return "failed";
  }
  return "failed";
}

/// One analytic grid point of a transfer-curve or CV sweep.
struct SweepPoint {
  double v_gs = 0.0;
  double sigma_t = 0.0;
  std::size_t dist_index = 0;
  SweepStatus status = SweepStatus::Failed;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double cv = std::numeric_limits<double>::quiet_NaN();
  double rate = std::numeric_limits<double>::quiet_NaN();
  std::string detail;
};

/// Analytic ISI statistics at one point; series failures become Diverged,
/// other library errors Failed. Never throws a library Error.
inline SweepPoint analytic_point(const ImtCircuit& c, double v_gs, const NoiseSpec& noise,
                                 int highest, const SeriesControl& ctl = {}) {
  SweepPoint p;
  p.v_gs = v_gs;
  p.sigma_t = noise.sigma_t;
  try {
    const auto m = isi_moments_at(c, v_gs, noise, highest, ctl);
    p.mean = m.mean;
    p.cv = m.cv;
    p.rate = m.firing_rate;
    p.status = SweepStatus::Converged;
  } catch (const Error& e) {
    p.status = e.is_series_failure() ? SweepStatus::Diverged : SweepStatus::Failed;
    p.detail = e.what();
  }
  return p;
}

/// CV at one (σ_t, threshold law) point.
inline SweepPoint cv_point(const ImtCircuit& c, double v_gs, double sigma_t, double sigma_t_unit,
                           const ThresholdDist& threshold, const SeriesControl& ctl = {}) {
  return analytic_point(c, v_gs, NoiseSpec{sigma_t, sigma_t_unit, threshold}, 2, ctl);
}

/// CV over σ_t × threshold laws at fixed v_gs. Points are stored
/// dist-major: points[d * sigma_t.size() + s].
struct CvSweep {
  std::vector<double> sigma_t;
  std::vector<ThresholdDist> dists;
  std::vector<SweepPoint> points;

  const SweepPoint& at(std::size_t dist, std::size_t sigma) const {
    return points[dist * sigma_t.size() + sigma];
  }
};

inline CvSweep cv_sweep(const ImtCircuit& c, double v_gs, const std::vector<double>& sigma_t,
                        double sigma_t_unit, const std::vector<ThresholdDist>& dists,
                        const SeriesControl& ctl = {}, unsigned workers = 1) {
  require(!sigma_t.empty() && !dists.empty(), ErrorCode::DomainError,
          "CV sweep needs a nonempty sigma_t grid and at least one distribution");
  for (double s : sigma_t) {
    require(s > 0.0, ErrorCode::DomainError, "CV sweep sigma_t values must be positive");
  }
  CvSweep out{sigma_t, dists, std::vector<SweepPoint>(sigma_t.size() * dists.size())};
  parallel_for(out.points.size(), workers, [&](std::size_t i) {
    const std::size_t d = i / sigma_t.size();
    const std::size_t s = i % sigma_t.size();
    out.points[i] = cv_point(c, v_gs, sigma_t[s], sigma_t_unit, dists[d], ctl);
    out.points[i].dist_index = d;
  });
  return out;
}

}  // namespace imt
