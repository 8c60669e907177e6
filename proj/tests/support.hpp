#pragma once

#include <cmath>
#include <random>

#include "imt/circuit.hpp"

namespace imt::testing {

/// The circuit from configs/reference.json.
inline ImtCircuit reference_circuit() {
  ImtCircuit c;
  c.device = {2e-3, 5e-5, 1.2, 0.6};
  c.v_dd = 3.0;
  c.L = 1e-5;
  c.C = 1.5e-9;
  c.series = TransistorModel{3.33e-4, 1.635};
  return c;
}

inline constexpr double kReferenceUnit = 7.3e-5;

inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace imt::testing
