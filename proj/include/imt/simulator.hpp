#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "imt/circuit.hpp"
#include "imt/error.hpp"
#include "imt/fluctuating_fpt.hpp"
#include "imt/noise.hpp"
#include "imt/parallel.hpp"
#include "imt/threshold_dist.hpp"

namespace imt {

enum class SimModel { Full2D, Reduced1D, FhnCaricature };

inline const char* to_string(SimModel m) {
  switch (m) {
    case SimModel::Full2D: return "full2d";
    case SimModel::Reduced1D: return "reduced1d";
    case SimModel::FhnCaricature: return "fhn";
  }
  return "unknown";
}

struct CircuitState {
  double i_i = 0.0;
  double v_o = 0.0;
  PhaseState s = PhaseState::Insulating;
};

struct SimConfig {
  double dt = 1e-8;
  double duration = 1e-3;
  std::uint64_t seed = 1;
  SimModel model = SimModel::Reduced1D;
  /// Keep every k-th step in the trace; zero disables tracing.
  int record_stride = 0;
  std::optional<CircuitState> initial;

  /// Checks the step against the discharge time constant θ.
  void validate(double theta) const {
    require(dt > 0.0 && std::isfinite(dt), ErrorCode::ConfigError, "dt must be positive");
    require(duration >= 100.0 * dt, ErrorCode::ConfigError, "duration must cover >= 100 steps");
    require(dt <= theta / 50.0, ErrorCode::ConfigError,
            "dt exceeds the stability guard theta/50 (theta = " + std::to_string(theta) + " s)");
    require(record_stride >= 0, ErrorCode::ConfigError, "record_stride must be >= 0");
  }
};

struct SpikeTrain {
  std::vector<double> spike_times;
  std::vector<double> isis;
  bool truncated_last = true;
  RejectionStats thresholds;

  /// Rebuilds the intervals from the spike times.
  void derive_isis() {
    isis.clear();
    for (std::size_t k = 1; k < spike_times.size(); ++k) {
      isis.push_back(spike_times[k] - spike_times[k - 1]);
    }
  }
};

struct TraceRow {
  double t = 0.0;
  double i_i = 0.0;
  double v_o = 0.0;
  PhaseState s = PhaseState::Insulating;
};

struct FullResult {
  std::vector<TraceRow> trace;
  SpikeTrain train;
};

struct ReducedTraceRow {
  double t = 0.0;
  double v_i = 0.0;
};

struct ReducedResult {
  std::vector<ReducedTraceRow> trace;
  SpikeTrain train;
};

/// Time constant of the insulating-phase discharge.
inline double discharge_theta(const ImtCircuit& c, double v_gs) {
  return c.C / discharge_drift(c, v_gs).g_total;
}

/// One noiseless reduced cycle: crossing time from v_l to `v_h`; zero when
/// the threshold sample does not exceed v_l.
inline double reduced_cycle_noiseless(const ImtCircuit& c, double v_gs, double v_h) {
  return deterministic_isi(c, v_gs, v_h);
}

/// Euler-Maruyama integration of the L/C oscillator. The thermal noise
/// voltage sits in series with the device, so it enters L di/dt in both phases.
inline FullResult simulate_full(const ImtCircuit& c, double v_gs, const NoiseSpec& noise,
                                const SimConfig& cfg) {
  c.validate();
  noise.validate();
  require(cfg.model == SimModel::Full2D, ErrorCode::ConfigError, "simulate_full needs Full2D");
  require(c.L > 0.0, ErrorCode::DomainError, "the 2-D model needs L > 0");
  cfg.validate(discharge_theta(c, v_gs));

  auto rng = make_stream(cfg.seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  FullResult out;
  auto& train = out.train;

  CircuitState st = cfg.initial.value_or(
      CircuitState{c.device.g_vi * c.device.v_l, c.v_dd - c.device.v_l, PhaseState::Insulating});
  double v_h = sample_above(noise.threshold, c.device.v_l, rng, train.thresholds);

  const double dt = cfg.dt;
  const double noise_step = noise.physical_sigma() * std::sqrt(dt) / c.L;
  const double limit = 1e3 * c.v_dd;
  const auto steps = static_cast<std::int64_t>(std::ceil(cfg.duration / dt));
  for (std::int64_t n = 0; n <= steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    if (cfg.record_stride > 0 && n % cfg.record_stride == 0) {
      out.trace.push_back({t, st.i_i, st.v_o, st.s});
    }
    if (n == steps) break;
    const bool metallic = st.s == PhaseState::Metallic;
    const double h = st.i_i / c.device.conductance(metallic);
    const double di = (c.v_dd - h - st.v_o) / c.L * dt + noise_step * normal(rng);
    const double dv = (st.i_i - c.series_current(v_gs, st.v_o)) / c.C * dt;
    st.i_i += di;
    st.v_o += dv;
    if (!(std::abs(st.v_o) <= limit && std::abs(st.i_i / c.device.g_vi) <= limit)) {
      throw Error(ErrorCode::NumericalBlowup,
                  "state exceeded 1e3 * v_dd at t = " + std::to_string(t) + " s; reduce dt");
    }
    const double v_dev = c.v_dd - st.v_o;
    if (!metallic && v_dev >= v_h) {
      st.s = PhaseState::Metallic;
      train.spike_times.push_back(t + dt);
    } else if (metallic && v_dev <= c.device.v_l) {
      st.s = PhaseState::Insulating;
      v_h = sample_above(noise.threshold, c.device.v_l, rng, train.thresholds);
    }
  }
  train.derive_isis();
  return out;
}

/// Insulating-phase discharge only: v_i rises from v_l with additive noise
/// g_vi·σ_t/C dw; on reaching the current threshold sample a spike is logged
/// and v_i resets to v_l at once. Noiseless runs interpolate the crossing.
inline ReducedResult simulate_reduced_traced(const ImtCircuit& c, double v_gs,
                                             const NoiseSpec& noise, const SimConfig& cfg,
                                             std::uint64_t stream = 0) {
  c.validate();
  noise.validate();
  require(cfg.model == SimModel::Reduced1D, ErrorCode::ConfigError,
          "simulate_reduced needs Reduced1D");
  const auto drift = discharge_drift(c, v_gs);
  const double theta = c.C / drift.g_total;
  cfg.validate(theta);
  const double mu = drift.mu();

  auto rng = make_stream(cfg.seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  ReducedResult out;
  auto& train = out.train;

  const double dt = cfg.dt;
  const double decay = dt / theta;
  const double noise_step = c.device.g_vi * noise.physical_sigma() / c.C * std::sqrt(dt);
  const bool noiseless = noise_step == 0.0;
  const double bridge_var = noise_step * noise_step;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double v_l = c.device.v_l;
  const double limit = 1e3 * c.v_dd;
  const auto steps = static_cast<std::int64_t>(std::ceil(cfg.duration / dt));

  double v = v_l;
  double v_h = sample_above(noise.threshold, v_l, rng, train.thresholds);
  for (std::int64_t n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    if (cfg.record_stride > 0 && n % cfg.record_stride == 0) out.trace.push_back({t, v});
    double next = v + decay * (mu - v);
    if (!noiseless) next += noise_step * normal(rng);
    if (!(std::abs(next) <= limit)) {
      throw Error(ErrorCode::NumericalBlowup,
                  "v_i exceeded 1e3 * v_dd at t = " + std::to_string(t) + " s; reduce dt");
    }
    bool crossed = next >= v_h;
    if (!crossed && !noiseless) {
      // Brownian bridge between the two grid values.
      const double exponent = 2.0 * (v_h - v) * (v_h - next) / bridge_var;
      crossed = exponent < 40.0 && uniform(rng) < std::exp(-exponent);
    }
    if (crossed) {
      const double frac = noiseless ? (v_h - v) / (next - v) : 1.0;
      train.spike_times.push_back(t + frac * dt);
      v = v_l;
      v_h = sample_above(noise.threshold, v_l, rng, train.thresholds);
    } else {
      v = next;
    }
  }
  train.derive_isis();
  return out;
}

inline SpikeTrain simulate_reduced(const ImtCircuit& c, double v_gs, const NoiseSpec& noise,
                                   const SimConfig& cfg, std::uint64_t stream = 0) {
  SimConfig quiet = cfg;
  quiet.record_stride = 0;
  return simulate_reduced_traced(c, v_gs, noise, quiet, stream).train;
}

/// Independent reduced-model trials; trial k draws from stream (seed, k).
inline std::vector<SpikeTrain> run_reduced_trials(const ImtCircuit& c, double v_gs,
                                                  const NoiseSpec& noise, const SimConfig& cfg,
                                                  std::size_t trials, unsigned workers = 1) {
  std::vector<SpikeTrain> trains(trials);
  parallel_for(trials, workers,
               [&](std::size_t k) { trains[k] = simulate_reduced(c, v_gs, noise, cfg, k); });
  return trains;
}

/// Piecewise-linear N-shaped f: slope left_slope below u_low, middle_slope
/// between the breakpoints, right_slope above u_high; f(u_low) = f_low.
struct FhnParams {
  double u_low = -1.0;
  double u_high = 1.0;
  double f_low = -2.0 / 3.0;
  double left_slope = -1.0;
  double middle_slope = 1.0;
  double right_slope = -1.0;
  double a = 0.7;
  double b = 0.8;
  double tau = 12.5;
  double i_ext = 0.0;

  void validate() const {
    require(u_low < u_high, ErrorCode::DomainError, "FHN breakpoints must be increasing");
    require(tau > 0.0, ErrorCode::DomainError, "FHN tau must be positive");
    require(middle_slope * left_slope < 0.0 && middle_slope * right_slope < 0.0,
            ErrorCode::DomainError, "FHN middle slope must oppose the outer slopes");
  }

  double f(double u) const {
    if (u < u_low) return f_low + left_slope * (u - u_low);
    if (u <= u_high) return f_low + middle_slope * (u - u_low);
    return f_low + middle_slope * (u_high - u_low) + right_slope * (u - u_high);
  }
};

/// FHN caricature of the circuit: u is the device current, w the output
/// voltage, time in units of L. The outer branches are v_dd − i/g, the middle
/// branch joins the two switching points.
inline FhnParams fhn_from_circuit(const ImtCircuit& c, double v_gs) {
  c.validate();
  require(c.L > 0.0 && c.has_transistor(), ErrorCode::DomainError,
          "the FHN mapping needs L > 0 and a transistor load");
  const auto& dev = c.device;
  FhnParams p;
  p.u_low = dev.g_vi * dev.v_h_nominal;
  p.u_high = dev.g_vm * dev.v_l;
  require(p.u_high > p.u_low, ErrorCode::DomainError,
          "metallic switching current must exceed the insulating one");
  p.f_low = c.v_dd - dev.v_h_nominal;
  p.left_slope = -1.0 / dev.g_vi;
  p.middle_slope = (dev.v_h_nominal - dev.v_l) / (p.u_high - p.u_low);
  p.right_slope = -1.0 / dev.g_vm;
  p.a = -std::get<TransistorModel>(c.series).current(v_gs);
  p.b = 0.0;
  p.tau = c.C / c.L;
  p.i_ext = 0.0;
  return p;
}

struct FhnRow {
  double t = 0.0;
  double u = 0.0;
  double w = 0.0;
};

/// du = (f(u) − w + I_ext) dt + noise dW,  τ dw = (u − b·w + a) dt.
inline std::vector<FhnRow> simulate_fhn(const FhnParams& p, double noise, const SimConfig& cfg,
                                        double u0, double w0) {
  p.validate();
  require(cfg.model == SimModel::FhnCaricature, ErrorCode::ConfigError,
          "simulate_fhn needs FhnCaricature");
  require(cfg.dt > 0.0 && cfg.duration >= 100.0 * cfg.dt, ErrorCode::ConfigError,
          "FHN run needs dt > 0 and >= 100 steps");
  require(noise >= 0.0, ErrorCode::DomainError, "FHN noise must be >= 0");
  auto rng = make_stream(cfg.seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double dt = cfg.dt;
  const double sq = noise * std::sqrt(dt);
  const int stride = std::max(1, cfg.record_stride);
  const auto steps = static_cast<std::int64_t>(std::ceil(cfg.duration / dt));
  const double limit = 1e3 * (1.0 + std::abs(u0) + std::abs(w0) + std::abs(p.a) +
                              std::abs(p.f_low) + std::abs(p.u_high));
  std::vector<FhnRow> trace;
  double u = u0;
  double w = w0;
  for (std::int64_t n = 0; n <= steps; ++n) {
    if (n % stride == 0) trace.push_back({static_cast<double>(n) * dt, u, w});
    if (n == steps) break;
    const double du = (p.f(u) - w + p.i_ext) * dt + (sq > 0.0 ? sq * normal(rng) : 0.0);
    const double dw = (u - p.b * w + p.a) / p.tau * dt;
    u += du;
    w += dw;
    if (!(std::abs(u) <= limit && std::abs(w) <= limit)) {
      throw Error(ErrorCode::NumericalBlowup, "FHN state diverged; reduce dt");
    }
  }
  return trace;
}

/// Pooled ISI moments with batch-means standard errors.
struct McIsiMoments {
  IsiMoments moments;
  std::size_t count = 0;
  double se_mean = 0.0;
  double se_cv = 0.0;
  RejectionStats thresholds;
};

inline McIsiMoments mc_isi_moments(const std::vector<SpikeTrain>& trains) {
  std::vector<double> pooled;
  McIsiMoments out;
  for (const auto& tr : trains) {
    pooled.insert(pooled.end(), tr.isis.begin(), tr.isis.end());
    out.thresholds += tr.thresholds;
  }
  const std::size_t n = pooled.size();
  require(n >= 100, ErrorCode::InsufficientSamples,
          "need at least 100 intervals, got " + std::to_string(n));
  auto moments_of = [](const double* first, std::size_t count) {
    long double s1 = 0, s2 = 0, s3 = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const long double x = first[i];
      s1 += x;
      s2 += x * x;
      s3 += x * x * x;
    }
    const long double c = static_cast<long double>(count);
    return std::array<double, 3>{static_cast<double>(s1 / c), static_cast<double>(s2 / c),
                                 static_cast<double>(s3 / c)};
  };
  const auto all = moments_of(pooled.data(), n);
  out.count = n;
  // Variance about the sample mean, so identical intervals give exactly zero.
  long double ss = 0;
  for (double x : pooled) ss += (x - all[0]) * (static_cast<long double>(x) - all[0]);
  const double var = static_cast<double>(ss / static_cast<long double>(n));
  out.moments.highest = 3;
  out.moments.mean = all[0];
  out.moments.raw2 = all[1];
  out.moments.raw3 = all[2];
  out.moments.variance = var;
  out.moments.cv = all[0] > 0.0 ? std::sqrt(var) / all[0] : 0.0;
  out.moments.firing_rate = all[0] > 0.0 ? 1.0 / all[0] : 0.0;

  const std::size_t batches = std::clamp<std::size_t>(n / 100, 10, 50);
  const std::size_t size = n / batches;
  std::vector<double> means, cvs;
  for (std::size_t b = 0; b < batches; ++b) {
    const double* first = pooled.data() + b * size;
    const auto m = moments_of(first, size);
    long double bss = 0;
    for (std::size_t i = 0; i < size; ++i) bss += (first[i] - m[0]) * (first[i] - m[0]);
    means.push_back(m[0]);
    cvs.push_back(m[0] > 0.0 ? std::sqrt(static_cast<double>(bss / size)) / m[0] : 0.0);
  }
  auto se = [&](const std::vector<double>& v) {
    double mu = 0.0;
    for (double x : v) mu += x;
    mu /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  };
  out.se_mean = se(means);
  out.se_cv = se(cvs);
  return out;
}

}  // namespace imt
