#pragma once

// Core library: circuit model, simulators, passage-time analytics and
// threshold laws. The harness and oracles are included separately.

#include "imt/error.hpp"
#include "imt/precision.hpp"
#include "imt/special_functions.hpp"
#include "imt/series.hpp"
#include "imt/ou_fpt.hpp"
#include "imt/threshold_dist.hpp"
#include "imt/circuit.hpp"
#include "imt/noise.hpp"
#include "imt/parallel.hpp"
#include "imt/simulator.hpp"
#include "imt/fluctuating_fpt.hpp"
