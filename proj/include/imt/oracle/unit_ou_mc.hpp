#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "imt/error.hpp"
#include "imt/parallel.hpp"

// Euler-Maruyama first-passage times of dx = −x dt + √2 dw with a Brownian
// bridge crossing test between grid points.

namespace imt::oracle {

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct FptMonteCarlo {
  McEstimate tau1;
  McEstimate tau2;
  std::size_t trials = 0;
};

namespace detail {

/// One passage time; the bridge between x_a and x_b (both below S) crossed S
/// with probability exp(−(S − x_a)(S − x_b)/(σ²dt/2)), σ² = 2.
template <class Urbg>
double passage_time(double S, double x0, double dt, Urbg& rng, double horizon) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double amp = std::sqrt(2.0 * dt);
  double x = x0;
  double t = 0.0;
  while (t < horizon) {
    const double next = x - x * dt + amp * normal(rng);
    if (next >= S) return t + dt;
    if (unif(rng) < std::exp(-(S - x) * (S - next) / dt)) return t + dt;
    x = next;
    t += dt;
  }
  throw Error(ErrorCode::NumericalBlowup, "passage time exceeded the simulation horizon");
}

/// Per-trial (t, t²) at step dt, for trials [0, trials).
inline void sample_passages(double S, double x0, double dt, std::uint64_t seed,
                            std::size_t trials, unsigned workers, std::vector<double>& out) {
  out.assign(trials, 0.0);
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (trials + kChunk - 1) / kChunk;
  parallel_for(chunks, workers, [&](std::size_t c) {
    auto rng = make_stream(seed, c);
    const std::size_t end = std::min(trials, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      out[i] = passage_time(S, x0, dt, rng, 1e6);
    }
  });
}

}  // namespace detail

/// τ1 and τ2 with one Richardson step: 2·m(dt/2) − m(dt), the two levels
/// driven by independent streams.
inline FptMonteCarlo unit_ou_passage_moments(double S, double x0, std::size_t trials, double dt,
                                             std::uint64_t seed, unsigned workers = 1) {
  require(x0 < S, ErrorCode::OrderingError, "start must lie below the boundary");
  require(trials >= 100 && dt > 0.0, ErrorCode::DomainError, "need >= 100 trials and dt > 0");
  std::vector<double> coarse, fine;
  detail::sample_passages(S, x0, dt, seed, trials, workers, coarse);
  detail::sample_passages(S, x0, dt / 2, seed + 0x9e3779b97f4a7c15ULL, trials, workers, fine);
  auto stats = [](const std::vector<double>& v, int power) {
    long double s = 0, ss = 0;
    for (double t : v) {
      const long double y = power == 1 ? t : static_cast<long double>(t) * t;
      s += y;
      ss += y * y;
    }
    const long double n = static_cast<long double>(v.size());
    const long double m = s / n;
    const long double var = (ss / n - m * m) * n / (n - 1);
    return std::pair<double, double>{static_cast<double>(m), static_cast<double>(var / n)};
  };
  FptMonteCarlo r;
  r.trials = trials;
  for (int p = 1; p <= 2; ++p) {
    const auto [mc, vc] = stats(coarse, p);
    const auto [mf, vf] = stats(fine, p);
    McEstimate e{2 * mf - mc, std::sqrt(4 * vf + vc)};
    (p == 1 ? r.tau1 : r.tau2) = e;
  }
  return r;
}

}  // namespace imt::oracle
