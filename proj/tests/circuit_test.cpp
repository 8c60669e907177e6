#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "imt/circuit.hpp"
#include "support.hpp"

namespace {

using namespace imt;
using imt::testing::reference_circuit;

TEST(DeviceVoltage, BranchValues) {
  const ImtDevice dev{2e-3, 5e-5, 1.2, 0.6};
  EXPECT_EQ(device_voltage(0.0, PhaseState::Insulating, dev), 0.0);
  EXPECT_EQ(device_voltage(0.0, PhaseState::Metallic, dev), 0.0);
  EXPECT_DOUBLE_EQ(device_voltage(dev.g_vi * dev.v_h_nominal, PhaseState::Insulating, dev), 1.2);
  EXPECT_LT(device_voltage(100e-6, PhaseState::Metallic, dev),
            device_voltage(100e-6, PhaseState::Insulating, dev));
}

TEST(DeviceVoltage, IncreasingAndMetallicBelowInsulating) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double g_vi = std::exp(-12 + 6 * u(rng));
    const ImtDevice dev{g_vi * (1.5 + 100 * u(rng)), g_vi, 1.0 + u(rng), 0.5 * u(rng) + 0.1};
    const double a = 1e-6 * (1 + u(rng)), b = a * (1 + u(rng));
    for (auto s : {PhaseState::Insulating, PhaseState::Metallic}) {
      EXPECT_LT(device_voltage(a, s, dev), device_voltage(b, s, dev));
    }
    EXPECT_LT(device_voltage(a, PhaseState::Metallic, dev),
              device_voltage(a, PhaseState::Insulating, dev));
  }
}

TEST(FixedPoints, ShortedSeriesPutsSupplyAcrossDevice) {
  auto c = reference_circuit();
  c.series = SeriesConductance{std::numeric_limits<double>::infinity()};
  const auto r = fixed_points(c, 0.0);
  EXPECT_EQ(r.s1.v_o, 0.0);
  EXPECT_EQ(r.s1.device_voltage, c.v_dd);
  EXPECT_FALSE(r.s1_reachable);
}

TEST(FixedPoints, SpikingAndRestingLoadLines) {
  const auto c = reference_circuit();
  const auto spiking = fixed_points(c, 1.86);
  EXPECT_TRUE(spiking.oscillatory);
  EXPECT_FALSE(spiking.s1_reachable);
  const auto resting = fixed_points(c, 1.78);
  EXPECT_FALSE(resting.oscillatory);
  EXPECT_TRUE(resting.s1_reachable);
  EXPECT_GT(resting.s1.device_voltage, c.device.v_l);
  EXPECT_LT(resting.s1.device_voltage, c.device.v_h_nominal);
}

TEST(FixedPoints, SeriesConductanceSolvesBothBranches) {
  auto c = reference_circuit();
  c.series = SeriesConductance{1e-4};
  const auto r = fixed_points(c, 0.0);
  for (const auto& [fp, g] : {std::pair{r.s1, c.device.g_vi}, std::pair{r.s2, c.device.g_vm}}) {
    EXPECT_NEAR(fp.i_i, 1e-4 * fp.v_o, 1e-15);
    EXPECT_NEAR(c.v_dd - fp.v_o, fp.i_i / g, 1e-12);
  }
}

TEST(FixedPoints, InvariantUnderCommonConductanceScaling) {
  for (double k : {0.1, 3.0, 250.0}) {
    for (bool transistor : {true, false}) {
      auto a = reference_circuit();
      if (!transistor) a.series = SeriesConductance{7e-5};
      auto b = a;
      b.device.g_vi *= k;
      b.device.g_vm *= k;
      if (transistor) {
        std::get<TransistorModel>(b.series).g_m *= k;
      } else {
        std::get<SeriesConductance>(b.series).g_s *= k;
      }
      const auto ra = fixed_points(a, 1.83), rb = fixed_points(b, 1.83);
      EXPECT_NEAR(ra.s1.device_voltage, rb.s1.device_voltage, 1e-12);
      EXPECT_NEAR(ra.s2.device_voltage, rb.s2.device_voltage, 1e-12);
      EXPECT_EQ(ra.oscillatory, rb.oscillatory);
    }
  }
}

TEST(Bifurcation, LocatedBetweenRestingAndSpiking) {
  const auto c = reference_circuit();
  const double v = bifurcation_vgs(c, 1.78, 1.86);
  EXPECT_GT(v, 1.78);
  EXPECT_LT(v, 1.86);
  const auto& t = std::get<TransistorModel>(c.series);
  EXPECT_NEAR(v, t.v_t0 + c.device.g_vi * c.device.v_h_nominal / t.g_m, 2e-6);
  const double eps = 1e-5;
  EXPECT_GT(fixed_points(c, v + eps).s1.device_voltage, c.device.v_h_nominal);
  EXPECT_LE(fixed_points(c, v - eps).s1.device_voltage, c.device.v_h_nominal);
}

TEST(Bifurcation, MonotoneAcrossTheThreshold) {
  const auto c = reference_circuit();
  const double v = bifurcation_vgs(c, 1.7, 1.9);
  for (double x = 1.70; x <= 1.90; x += 0.005) {
    if (std::abs(x - v) < 1e-5) continue;
    EXPECT_EQ(fixed_points(c, x).oscillatory, x > v) << x;
  }
}

TEST(Bifurcation, NoSignChangeIsAnError) {
  try {
    bifurcation_vgs(reference_circuit(), 1.84, 1.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoBifurcationInRange);
  }
}

TEST(Circuit, ValidationRejectsBadParameters) {
  auto c = reference_circuit();
  c.device.g_vm = c.device.g_vi / 2;
  EXPECT_THROW(c.validate(), Error);
  c = reference_circuit();
  c.v_dd = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = reference_circuit();
  c.C = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = reference_circuit();
  c.series = TransistorModel{0.0, 1.0};
  EXPECT_THROW(c.validate(), Error);
}

TEST(Transistor, SaturationCurrentIsClampedAtZero) {
  const TransistorModel t{3.33e-4, 1.635};
  EXPECT_EQ(t.current(1.5), 0.0);
  EXPECT_NEAR(t.current(1.8), 3.33e-4 * 0.165, 1e-18);
}

}  // namespace
