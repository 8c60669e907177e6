#pragma once

#include <cmath>

#include "imt/error.hpp"
#include "imt/threshold_dist.hpp"

namespace imt {

/// Thermal noise voltage η dt = σ_t·unit dw, in series with the device,
/// plus the spike-to-spike law of the IMT threshold.
struct NoiseSpec {
  double sigma_t = 0.0;
  /// Volts·s^(-1/2) per unit of sigma_t; lets sweeps use a normalized axis.
  double sigma_t_unit = 1.0;
  ThresholdDist threshold = dist::Constant{0.0};

  double physical_sigma() const { return sigma_t * sigma_t_unit; }

  void validate() const {
    require(sigma_t >= 0.0 && std::isfinite(sigma_t), ErrorCode::DomainError,
            "sigma_t must be >= 0");
    require(sigma_t_unit > 0.0 && std::isfinite(sigma_t_unit), ErrorCode::DomainError,
            "sigma_t_unit must be positive");
    imt::validate(threshold);
  }
};

}  // namespace imt
