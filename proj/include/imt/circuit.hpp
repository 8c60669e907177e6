#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>

#include "imt/error.hpp"

namespace imt {

/// Hysteretic two-state resistor.
struct ImtDevice {
  double g_vm = 0.0;  ///< metallic-state conductance (S)
  double g_vi = 0.0;  ///< insulating-state conductance (S)
  double v_h_nominal = 0.0;
  double v_l = 0.0;

  void validate() const {
    require(g_vi > 0.0 && g_vm > g_vi && std::isfinite(g_vm), ErrorCode::DomainError,
            "device needs g_vm > g_vi > 0");
    require(v_l > 0.0 && v_h_nominal > v_l && std::isfinite(v_h_nominal),
            ErrorCode::DomainError, "device needs v_h > v_l > 0");
  }

  double conductance(bool metallic) const { return metallic ? g_vm : g_vi; }
};

enum class PhaseState { Insulating, Metallic };

inline double device_voltage(double i_i, PhaseState s, const ImtDevice& dev) {
  return s == PhaseState::Metallic ? i_i / dev.g_vm : i_i / dev.g_vi;
}

/// Series transistor held in saturation: I = g_m·(v_gs − v_t0), clamped at zero.
struct TransistorModel {
  double g_m = 0.0;
  double v_t0 = 0.0;

  double current(double v_gs) const { return std::max(0.0, g_m * (v_gs - v_t0)); }
};

/// Fixed series conductance in place of the transistor.
struct SeriesConductance {
  double g_s = 0.0;
};

using SeriesElement = std::variant<SeriesConductance, TransistorModel>;

struct ImtCircuit {
  ImtDevice device;
  double v_dd = 0.0;
  double L = 0.0;  ///< H
  double C = 0.0;  ///< F
  SeriesElement series = TransistorModel{};

  void validate() const {
    device.validate();
    require(v_dd > device.v_h_nominal && std::isfinite(v_dd), ErrorCode::DomainError,
            "supply must exceed the IMT threshold");
    require(L >= 0.0 && std::isfinite(L), ErrorCode::DomainError, "inductance must be >= 0");
    require(C > 0.0 && std::isfinite(C), ErrorCode::DomainError, "capacitance must be > 0");
    if (const auto* t = std::get_if<TransistorModel>(&series)) {
      require(t->g_m > 0.0 && std::isfinite(t->g_m), ErrorCode::DomainError,
              "transconductance must be positive");
    } else {
      const auto& r = std::get<SeriesConductance>(series);
      require(r.g_s > 0.0, ErrorCode::DomainError, "series conductance must be positive");
    }
  }

  bool has_transistor() const { return std::holds_alternative<TransistorModel>(series); }

  /// Current drawn by the series element at output node voltage v_o.
  double series_current(double v_gs, double v_o) const {
    if (const auto* t = std::get_if<TransistorModel>(&series)) return t->current(v_gs);
    return std::get<SeriesConductance>(series).g_s * v_o;
  }
};

struct FixedPoint {
  double i_i = 0.0;
  double v_o = 0.0;
  /// v_dd − v_o, the voltage across the device.
  double device_voltage = 0.0;
};

struct FixedPointReport {
  FixedPoint s1;  ///< insulating branch
  FixedPoint s2;  ///< metallic branch
  bool s1_reachable = false;
  bool s2_reachable = false;
  bool oscillatory = false;
};

/// Absolute tolerance for comparing fixed points against the thresholds.
inline constexpr double kReachabilityTolerance = 1e-9;

namespace detail {

inline FixedPoint branch_fixed_point(const ImtCircuit& c, double g, double v_gs) {
  if (const auto* t = std::get_if<TransistorModel>(&c.series)) {
    const double i = t->current(v_gs);
    const double v = i / g;
    return {i, c.v_dd - v, v};
  }
  const double g_s = std::get<SeriesConductance>(c.series).g_s;
  if (std::isinf(g_s)) return {g * c.v_dd, 0.0, c.v_dd};
  const double denom = g + g_s;
  require(std::abs(denom) > 0.0, ErrorCode::DegenerateLoadLine,
          "load line is parallel to the device branch");
  const double v_o = c.v_dd * g / denom;
  return {g_s * v_o, v_o, c.v_dd - v_o};
}

}  // namespace detail

inline FixedPointReport fixed_points(const ImtCircuit& c, double v_gs) {
  c.validate();
  FixedPointReport r;
  r.s1 = detail::branch_fixed_point(c, c.device.g_vi, v_gs);
  r.s2 = detail::branch_fixed_point(c, c.device.g_vm, v_gs);
  const double lo = c.device.v_l - kReachabilityTolerance;
  const double hi = c.device.v_h_nominal + kReachabilityTolerance;
  r.s1_reachable = r.s1.device_voltage >= lo && r.s1.device_voltage <= hi;
  r.s2_reachable = r.s2.device_voltage >= lo && r.s2.device_voltage <= hi;
  r.oscillatory = r.s1.device_voltage > hi && r.s2.device_voltage < lo;
  return r;
}

/// Gate voltage at which the circuit switches between resting and spiking,
/// located by bisection.
inline double bifurcation_vgs(const ImtCircuit& c, double v_lo, double v_hi,
                              double tolerance = 1e-6) {
  require(v_lo < v_hi, ErrorCode::DomainError, "bifurcation range must be increasing");
  require(tolerance > 0.0, ErrorCode::DomainError, "bisection tolerance must be positive");
  const bool osc_lo = fixed_points(c, v_lo).oscillatory;
  const bool osc_hi = fixed_points(c, v_hi).oscillatory;
  require(osc_lo != osc_hi, ErrorCode::NoBifurcationInRange,
          "oscillatory status is the same at both ends of the range");
  double a = v_lo;
  double b = v_hi;
  while (b - a > tolerance) {
    const double m = 0.5 * (a + b);
    if (fixed_points(c, m).oscillatory == osc_lo) {
      a = m;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace imt
