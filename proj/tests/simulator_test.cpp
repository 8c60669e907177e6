#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "imt/fluctuating_fpt.hpp"
#include "imt/simulator.hpp"
#include "support.hpp"

namespace {

using namespace imt;
using imt::testing::kReferenceUnit;
using imt::testing::reference_circuit;
using imt::testing::rel_err;

SimConfig reduced_config(double dt, double duration, std::uint64_t seed = 1) {
  SimConfig cfg;
  cfg.model = SimModel::Reduced1D;
  cfg.dt = dt;
  cfg.duration = duration;
  cfg.seed = seed;
  return cfg;
}

NoiseSpec noiseless(double v_h = 1.2) { return NoiseSpec{0.0, kReferenceUnit, dist::Constant{v_h}}; }

void expect_valid_train(const SpikeTrain& t) {
  for (std::size_t k = 1; k < t.spike_times.size(); ++k) {
    EXPECT_LT(t.spike_times[k - 1], t.spike_times[k]);
  }
  ASSERT_EQ(t.isis.size() + 1, std::max<std::size_t>(1, t.spike_times.size()));
  for (std::size_t k = 0; k < t.isis.size(); ++k) {
    EXPECT_GT(t.isis[k], 0.0);
    EXPECT_EQ(t.isis[k], t.spike_times[k + 1] - t.spike_times[k]);
  }
}

TEST(Reduced, NoiselessIsiMatchesClosedForm) {
  const auto c = reference_circuit();
  const double dt = 5e-8;
  const auto train = simulate_reduced(c, 1.86, noiseless(), reduced_config(dt, 2e-3));
  ASSERT_GT(train.isis.size(), 20u);
  expect_valid_train(train);
  const double theta = discharge_theta(c, 1.86);
  const double mu = discharge_drift(c, 1.86).mu();
  const double exact = theta * std::log((mu - 0.6) / (mu - 1.2));
  for (double isi : train.isis) EXPECT_NEAR(isi, exact, 2 * dt);
}

TEST(Reduced, HalvingTheStepBarelyMovesTheNoiselessIsi) {
  const auto c = reference_circuit();
  const auto a = simulate_reduced(c, 1.84, noiseless(), reduced_config(1e-7, 1e-3));
  const auto b = simulate_reduced(c, 1.84, noiseless(), reduced_config(5e-8, 1e-3));
  ASSERT_FALSE(a.isis.empty());
  ASSERT_FALSE(b.isis.empty());
  EXPECT_LT(rel_err(a.isis.front(), b.isis.front()), 0.01);
}

TEST(Reduced, ThresholdAtOrBelowResetGivesZeroCycle) {
  EXPECT_EQ(reduced_cycle_noiseless(reference_circuit(), 1.86, 0.6), 0.0);
  EXPECT_EQ(reduced_cycle_noiseless(reference_circuit(), 1.86, 0.5), 0.0);
}

TEST(Reduced, RestingCircuitNeverSpikes) {
  const auto train = simulate_reduced(reference_circuit(), 1.78, noiseless(), reduced_config(5e-8, 2e-3));
  EXPECT_TRUE(train.spike_times.empty());
}

TEST(Reduced, BitIdenticalForTheSameSeed) {
  const auto c = reference_circuit();
  const NoiseSpec noise{6.0, kReferenceUnit, ep_from_std(1.2, 0.05, 3.0)};
  const auto a = simulate_reduced(c, 1.84, noise, reduced_config(5e-8, 1e-3, 9));
  const auto b = simulate_reduced(c, 1.84, noise, reduced_config(5e-8, 1e-3, 9));
  const auto other = simulate_reduced(c, 1.84, noise, reduced_config(5e-8, 1e-3, 10));
  EXPECT_EQ(a.spike_times, b.spike_times);
  EXPECT_NE(a.spike_times, other.spike_times);
  expect_valid_train(a);
}

TEST(Reduced, TrialsIndependentOfWorkerCount) {
  const auto c = reference_circuit();
  const NoiseSpec noise{8.0, kReferenceUnit, dist::Gaussian{1.2, 0.05}};
  const auto cfg = reduced_config(5e-8, 5e-4, 3);
  const auto serial = run_reduced_trials(c, 1.86, noise, cfg, 6, 1);
  const auto parallel = run_reduced_trials(c, 1.86, noise, cfg, 6, 3);
  for (std::size_t k = 0; k < serial.size(); ++k) {
    EXPECT_EQ(serial[k].spike_times, parallel[k].spike_times);
  }
}

TEST(Reduced, StepGuardRejectsLargeSteps) {
  const auto c = reference_circuit();
  const double theta = discharge_theta(c, 1.84);
  try {
    simulate_reduced(c, 1.84, noiseless(), reduced_config(theta / 25, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Reduced, ThresholdOnlyNoiseMatchesCrossingTimeImage) {
  // σ_t = 0 with a random threshold: the mean ISI is the average of the
  // noiseless crossing time over the threshold law.
  const auto c = reference_circuit();
  const double v_gs = 1.9, mean = 1.2, sd = 0.05;
  const NoiseSpec noise{0.0, kReferenceUnit, dist::Gaussian{mean, sd}};
  const auto train = simulate_reduced(c, v_gs, noise, reduced_config(2e-8, 0.3));
  double m = 0;
  for (double x : train.isis) m += x;
  m /= static_cast<double>(train.isis.size());
  // Trapezoid change of variables over ±8 std.
  double num = 0, den = 0;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double z = -8.0 + 16.0 * i / n;
    const double w = std::exp(-z * z / 2) * ((i == 0 || i == n) ? 0.5 : 1.0);
    num += w * deterministic_isi(c, v_gs, mean + sd * z);
    den += w;
  }
  EXPECT_LT(rel_err(m, num / den), 0.01);
}

TEST(Reduced, StepHalvingWithinSamplingNoise) {
  const auto c = reference_circuit();
  const NoiseSpec noise{8.0, kReferenceUnit, dist::Constant{1.2}};
  auto coarse = reduced_config(4e-8, 0.05, 21);
  auto fine = reduced_config(2e-8, 0.05, 22);
  const auto a = mc_isi_moments(run_reduced_trials(c, 1.86, noise, coarse, 8));
  const auto b = mc_isi_moments(run_reduced_trials(c, 1.86, noise, fine, 8));
  ASSERT_GE(a.count, 10000u);
  EXPECT_LT(std::abs(a.moments.mean - b.moments.mean), 3 * std::hypot(a.se_mean, b.se_mean));
}

TEST(Reduced, AgreesWithAnalyticMoments) {
  const auto c = reference_circuit();
  const NoiseSpec noise{10.0, kReferenceUnit, ep_from_std(1.2, 0.05, 3.0)};
  const auto mc = mc_isi_moments(run_reduced_trials(c, 1.86, noise, reduced_config(2e-8, 0.1, 5), 4));
  const auto an = isi_moments_at(c, 1.86, noise, 2);
  EXPECT_LT(std::abs(mc.moments.mean - an.mean), 3 * mc.se_mean + 0.002 * an.mean);
  EXPECT_LT(std::abs(mc.moments.cv - an.cv), 3 * mc.se_cv);
}

SimConfig full_config(double dt, double duration) {
  SimConfig cfg;
  cfg.model = SimModel::Full2D;
  cfg.dt = dt;
  cfg.duration = duration;
  return cfg;
}

TEST(Full, NoiselessTrainIsPeriodic) {
  auto c = reference_circuit();
  c.device.g_vm = 2e-2;
  const double dt = 2e-10;
  const auto r = simulate_full(c, 1.86, noiseless(), full_config(dt, 4e-4));
  ASSERT_GT(r.train.isis.size(), 5u);
  expect_valid_train(r.train);
  for (std::size_t k = 1; k < r.train.isis.size(); ++k) {
    EXPECT_NEAR(r.train.isis[k], r.train.isis[0], 2 * dt);
  }
}

TEST(Full, ConvergesToTheReducedModel) {
  auto c = reference_circuit();
  c.device.g_vm = 2e-2;
  const auto r = simulate_full(c, 1.86, noiseless(), full_config(2e-10, 4e-4));
  ASSERT_FALSE(r.train.isis.empty());
  EXPECT_LT(rel_err(r.train.isis.back(), deterministic_isi(c, 1.86, 1.2)), 0.02);
}

TEST(Full, RestingCircuitStopsSpiking) {
  const auto r = simulate_full(reference_circuit(), 1.78, noiseless(), full_config(2e-10, 2e-4));
  EXPECT_TRUE(r.train.spike_times.empty());
}

TEST(Full, TraceCarriesThePhase) {
  auto c = reference_circuit();
  c.device.g_vm = 2e-2;
  auto cfg = full_config(2e-10, 1e-4);
  cfg.record_stride = 100;
  const auto r = simulate_full(c, 1.86, noiseless(), cfg);
  ASSERT_FALSE(r.trace.empty());
  const bool saw_metallic = std::any_of(r.trace.begin(), r.trace.end(),
                                        [](const TraceRow& row) { return row.s == PhaseState::Metallic; });
  EXPECT_TRUE(saw_metallic);
}

TEST(Full, OversizedStepBlowsUp) {
  try {
    simulate_full(reference_circuit(), 1.86, noiseless(), full_config(1e-7, 1e-4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NumericalBlowup);
  }
}

SimConfig fhn_config(double dt, double duration) {
  SimConfig cfg;
  cfg.model = SimModel::FhnCaricature;
  cfg.dt = dt;
  cfg.duration = duration;
  cfg.record_stride = 10;
  return cfg;
}

std::size_t upward_crossings(const std::vector<FhnRow>& rows, double level, double after) {
  std::size_t n = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].t > after && rows[k - 1].u < level && rows[k].u >= level) ++n;
  }
  return n;
}

TEST(Fhn, NullclineOnMiddleBranchGivesLimitCycle) {
  const auto c = reference_circuit();
  const auto p = fhn_from_circuit(c, 1.86);
  const auto rows = simulate_fhn(p, 0.0, fhn_config(2e-5, 40.0), c.device.g_vi * c.device.v_l,
                                 c.v_dd - c.device.v_l);
  EXPECT_GE(upward_crossings(rows, 0.5 * (p.u_low + p.u_high), 10.0), 3u);
}

TEST(Fhn, NullclineOnOuterBranchRests) {
  const auto c = reference_circuit();
  const auto p = fhn_from_circuit(c, 1.78);
  const auto rows = simulate_fhn(p, 0.0, fhn_config(2e-5, 40.0), c.device.g_vi * c.device.v_l,
                                 c.v_dd - c.device.v_l);
  EXPECT_EQ(upward_crossings(rows, 0.5 * (p.u_low + p.u_high), 10.0), 0u);
}

TEST(Fhn, SwingMatchesTheHysteresisBand) {
  const auto c = reference_circuit();
  const auto p = fhn_from_circuit(c, 1.86);
  const auto rows = simulate_fhn(p, 0.0, fhn_config(2e-5, 40.0), c.device.g_vi * c.device.v_l,
                                 c.v_dd - c.device.v_l);
  double lo = 1e9, hi = -1e9;
  for (const auto& r : rows) {
    if (r.t < 10.0) continue;
    lo = std::min(lo, r.w);
    hi = std::max(hi, r.w);
  }
  EXPECT_LT(rel_err(hi - lo, c.device.v_h_nominal - c.device.v_l), 0.1);
}

TEST(Fhn, OversizedStepBlowsUp) {
  const auto c = reference_circuit();
  const auto p = fhn_from_circuit(c, 1.86);
  EXPECT_THROW(simulate_fhn(p, 0.0, fhn_config(1.0, 1000.0), 0.0, 1.0), Error);
}

TEST(IsiEstimator, IdenticalIntervalsHaveZeroCv) {
  SpikeTrain t;
  for (int k = 0; k <= 200; ++k) t.spike_times.push_back(1e-5 * k);
  t.isis.assign(200, 1e-5);
  const auto m = mc_isi_moments({t});
  EXPECT_EQ(m.moments.cv, 0.0);
  EXPECT_DOUBLE_EQ(m.moments.mean, 1e-5);
}

TEST(IsiEstimator, ExponentialIntervalsHaveUnitCv) {
  std::mt19937_64 rng(6);
  std::exponential_distribution<double> e(3.0);
  SpikeTrain t;
  for (int k = 0; k < 200000; ++k) t.isis.push_back(e(rng));
  const auto m = mc_isi_moments({t});
  EXPECT_NEAR(m.moments.cv, 1.0, 0.01);
  EXPECT_NEAR(m.moments.mean, 1.0 / 3.0, 4 * m.se_mean);
  EXPECT_GT(m.se_cv, 0.0);
}

TEST(IsiEstimator, TooFewIntervals) {
  SpikeTrain t;
  t.isis.assign(99, 1.0);
  try {
    mc_isi_moments({t});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
  }
}

}  // namespace
