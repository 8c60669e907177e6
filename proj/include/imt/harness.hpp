#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "imt/circuit.hpp"
#include "imt/config.hpp"
#include "imt/error.hpp"
#include "imt/fluctuating_fpt.hpp"
#include "imt/io.hpp"
#include "imt/oracle/siegert.hpp"
#include "imt/oracle/unit_ou_mc.hpp"
#include "imt/ou_fpt.hpp"
#include "imt/parallel.hpp"
#include "imt/simulator.hpp"
#include "imt/threshold_dist.hpp"

namespace imt::harness {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { Success = 0, ConfigFailure = 1, NumericalFailure = 2, ValidationFailure = 3 };

/// Input problems map to 1, everything the numerics raise to 2.
inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::ParseError:
    case ErrorCode::IoError:
    case ErrorCode::InsufficientData:
      return ConfigFailure;
    default:
      return NumericalFailure;
  }
}

/// Command-line replacements for config entries.
struct Overrides {
  std::optional<double> v_gs;
  std::optional<double> sigma_t;
  std::optional<std::string> dist;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

inline void apply(config::ExperimentConfig& cfg, const Overrides& o) {
  if (o.v_gs) {
    cfg.v_gs = {*o.v_gs};
    cfg.snapshot["v_gs"] = *o.v_gs;
  }
  if (o.sigma_t) {
    require(*o.sigma_t >= 0.0, ErrorCode::ConfigError, "--sigma-t must be >= 0");
    cfg.sigma_t = {*o.sigma_t};
    cfg.snapshot["noise"]["sigma_t"] = *o.sigma_t;
  }
  if (o.dist) {
    config::Json spec;
    try {
      spec = config::Json::parse(*o.dist);
    } catch (const config::Json::parse_error&) {
      spec = *o.dist;
    }
    cfg.dists = {config::parse_dist(spec)};
    cfg.snapshot["dists"] = config::Json::array({spec});
  }
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.sim.seed = *o.seed;
    cfg.snapshot["seed"] = *o.seed;
  }
  if (o.out) {
    cfg.output_dir = *o.out;
    cfg.snapshot["output_dir"] = o.out->string();
  }
}

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

/// Replaces delimiter and line characters so free text fits in one cell.
inline std::string cell_text(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  }
  return s;
}

/// Files emitted by one command. Data files get a metadata header; the
/// manifest listing every file with its checksum is written last.
class RunOutputs {
 public:
  RunOutputs(std::string command, const config::Json& snapshot, std::filesystem::path dir,
             std::uint64_t seed)
      : command_(std::move(command)),
        snapshot_(snapshot),
        dir_(std::move(dir)),
        seed_(seed),
        started_(utc_now()),
        config_sha_(io::sha256_hex(snapshot.dump())) {}

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& config_sha() const { return config_sha_; }

  std::vector<std::pair<std::string, std::string>> header() const {
    return {{"command", command_},
            {"tool_version", kToolVersion},
            {"config_sha256", config_sha_},
            {"seed", std::to_string(seed_)}};
  }

  void write(const std::string& name, const std::string& content) {
    io::write_file(dir_ / name, content);
    files_.emplace_back(name, io::sha256_hex(content));
  }

  void write_table(const std::string& name, io::Table t,
                   const std::vector<std::pair<std::string, std::string>>& extra = {}) {
    auto meta = header();
    meta.insert(meta.end(), extra.begin(), extra.end());
    meta.insert(meta.end(), t.meta.begin(), t.meta.end());
    t.meta = std::move(meta);
    write(name, t.render());
  }

  void write_values(const std::string& name, const std::vector<double>& values) {
    write(name, io::render_values(values, header()));
  }

  void finish(int status) {
    config::Json m;
    m["tool"] = "imt";
    m["tool_version"] = kToolVersion;
    m["command"] = command_;
    m["seed"] = seed_;
    m["config"] = snapshot_;
    m["config_sha256"] = config_sha_;
    m["started"] = started_;
    m["finished"] = utc_now();
    m["exit_status"] = status;
    m["outputs"] = config::Json::array();
    for (const auto& [name, sha] : files_) {
      m["outputs"].push_back({{"file", name}, {"sha256", sha}});
    }
    io::write_file(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  config::Json snapshot_;
  std::filesystem::path dir_;
  std::uint64_t seed_;
  std::string started_;
  std::string config_sha_;
  std::vector<std::pair<std::string, std::string>> files_;
};

/// Rejects step sizes that break the stability guard at any grid point.
inline void check_sim(const config::ExperimentConfig& cfg) {
  for (double v : cfg.v_gs) {
    try {
      cfg.sim.validate(discharge_theta(cfg.circuit, v));
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, e.what());
    }
  }
}

/// Runs a command body; the manifest is written whether it returns or throws.
template <class Body>
int with_manifest(RunOutputs& out, Body&& body) {
  try {
    const int status = body();
    out.finish(status);
    return status;
  } catch (const Error& e) {
    out.finish(exit_code(e.code()));
    throw;
  } catch (...) {
    out.finish(NumericalFailure);
    throw;
  }
}

// ---------------------------------------------------------------- ranking

struct Candidate {
  std::size_t dist_index = 0;
  std::string family;
  double sigma_t = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

/// Linear interpolation of y over increasing x; NaN outside the grid.
inline double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
  if (x.empty() || at < x.front() || at > x.back()) return std::numeric_limits<double>::quiet_NaN();
  if (x.size() == 1) return y.front();
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const std::size_t hi = std::min<std::size_t>(x.size() - 1, static_cast<std::size_t>(it - x.begin()));
  const std::size_t lo = hi - 1;
  const double w = (at - x[lo]) / (x[hi] - x[lo]);
  return (1.0 - w) * y[lo] + w * y[hi];
}

/// Sum of squared residuals of each candidate curve against measured points,
/// best first. Candidates that cannot be evaluated at every measured point
/// rank last with an infinite score.
inline std::vector<Candidate> rank_candidates(const std::vector<double>& grid,
                                              const std::vector<Candidate>& candidates,
                                              const std::vector<std::vector<double>>& curves,
                                              const std::vector<double>& measured_x,
                                              const std::vector<double>& measured_y) {
  std::vector<Candidate> out = candidates;
  for (std::size_t c = 0; c < out.size(); ++c) {
    double sse = 0.0;
    for (std::size_t k = 0; k < measured_x.size(); ++k) {
      const double r = interpolate(grid, curves[c], measured_x[k]) - measured_y[k];
      sse += r * r;
    }
    out[c].sse = std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) { return a.sse < b.sse; });
  return out;
}

// ---------------------------------------------------------------- commands

inline int cmd_transfer_curve(const config::ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.mc.enabled) check_sim(cfg);
  RunOutputs out("transfer-curve", cfg.snapshot, cfg.output_dir, cfg.seed);
  return with_manifest(out, [&] {
    const auto dists = cfg.threshold_dists();
    const std::size_t nd = dists.size(), ns = cfg.sigma_t.size(), nv = cfg.v_gs.size();
    const std::size_t total = nd * ns * nv;
    auto index = [&](std::size_t d, std::size_t s, std::size_t v) { return (d * ns + s) * nv + v; };

    std::vector<SweepPoint> points(total);
    parallel_for(total, cfg.parallelism, [&](std::size_t i) {
      const std::size_t d = i / (ns * nv), s = (i / nv) % ns, v = i % nv;
      points[i] = analytic_point(cfg.circuit, cfg.v_gs[v],
                                 NoiseSpec{cfg.sigma_t[s], cfg.sigma_t_unit, dists[d]}, 1, cfg.series);
      points[i].dist_index = d;
    });

    io::Table analytic;
    analytic.columns = {"dist_index", "family", "sigma_t", "v_gs", "status", "mean_isi", "rate", "note"};
    for (std::size_t i = 0; i < total; ++i) {
      const auto& p = points[i];
      analytic.add_row({std::to_string(p.dist_index), family_name(dists[p.dist_index]),
                        io::format_double(p.sigma_t), io::format_double(p.v_gs), to_string(p.status),
                        io::format_double(p.mean), io::format_double(p.rate), cell_text(p.detail)});
    }
    out.write_table("transfer_analytic.csv", analytic);
    std::size_t bad = 0;
    for (const auto& p : points) bad += p.status != SweepStatus::Converged;
    log << "transfer-curve: " << total << " analytic points, " << bad << " not converged\n";

    if (cfg.mc.enabled) {
      struct McRow {
        std::string status = "ok";
        std::size_t count = 0;
        double mean = std::numeric_limits<double>::quiet_NaN();
        double se = std::numeric_limits<double>::quiet_NaN();
        double rate = std::numeric_limits<double>::quiet_NaN();
      };
      std::vector<McRow> mc(total);
      SimConfig sim = cfg.sim;
      sim.model = SimModel::Reduced1D;
      sim.record_stride = 0;
      for (std::size_t i = 0; i < total; ++i) {
        const std::size_t d = i / (ns * nv), s = (i / nv) % ns, v = i % nv;
        SimConfig point_sim = sim;
        point_sim.seed = cfg.seed + 7919 * i;
        try {
          const auto trains =
              run_reduced_trials(cfg.circuit, cfg.v_gs[v],
                                 NoiseSpec{cfg.sigma_t[s], cfg.sigma_t_unit, dists[d]}, point_sim,
                                 cfg.mc.trials, cfg.parallelism);
          const auto m = mc_isi_moments(trains);
          mc[i].count = m.count;
          mc[i].mean = m.moments.mean;
          mc[i].se = m.se_mean;
          mc[i].rate = m.moments.firing_rate;
        } catch (const Error& e) {
          mc[i].status = e.code() == ErrorCode::InsufficientSamples ? "insufficient" : "failed";
        }
      }
      io::Table mct, cmp;
      mct.columns = {"dist_index", "family", "sigma_t", "v_gs", "status", "isi_count", "mean_isi",
                     "se_mean", "rate"};
      cmp.columns = {"dist_index", "family", "sigma_t", "v_gs", "analytic_rate", "mc_rate",
                     "rel_diff"};
      for (std::size_t d = 0; d < nd; ++d) {
        for (std::size_t s = 0; s < ns; ++s) {
          for (std::size_t v = 0; v < nv; ++v) {
            const auto i = index(d, s, v);
            const auto fam = family_name(dists[d]);
            const auto sg = io::format_double(cfg.sigma_t[s]);
            const auto vg = io::format_double(cfg.v_gs[v]);
            mct.add_row({std::to_string(d), fam, sg, vg, mc[i].status, std::to_string(mc[i].count),
                         io::format_double(mc[i].mean), io::format_double(mc[i].se),
                         io::format_double(mc[i].rate)});
            const double rel = (points[i].rate - mc[i].rate) / mc[i].rate;
            cmp.add_row({std::to_string(d), fam, sg, vg, io::format_double(points[i].rate),
                         io::format_double(mc[i].rate), io::format_double(rel)});
          }
        }
      }
      out.write_table("transfer_mc.csv", mct);
      out.write_table("transfer_comparison.csv", cmp);
      double worst = 0.0;
      std::size_t compared = 0;
      for (std::size_t i = 0; i < total; ++i) {
        if (mc[i].status != "ok" || points[i].status != SweepStatus::Converged) continue;
        worst = std::max(worst, std::abs(points[i].rate - mc[i].rate) / mc[i].rate);
        ++compared;
      }
      log << "monte carlo: " << compared << " of " << total
          << " points compared, max relative rate difference " << worst << "\n";
    }

    if (cfg.measured.transfer_curve) {
      const auto measured = io::Table::load(*cfg.measured.transfer_curve);
      const auto mx = measured.numeric_column("v_gs");
      const auto my = measured.numeric_column("rate");
      std::vector<Candidate> cands;
      std::vector<std::vector<double>> curves;
      for (std::size_t d = 0; d < nd; ++d) {
        for (std::size_t s = 0; s < ns; ++s) {
          cands.push_back({d, family_name(dists[d]), cfg.sigma_t[s]});
          std::vector<double> curve;
          for (std::size_t v = 0; v < nv; ++v) {
            const auto& p = points[index(d, s, v)];
            curve.push_back(p.status == SweepStatus::Converged
                                ? p.rate
                                : std::numeric_limits<double>::quiet_NaN());
          }
          curves.push_back(std::move(curve));
        }
      }
      const auto ranked = rank_candidates(cfg.v_gs, cands, curves, mx, my);
      io::Table rt;
      rt.columns = {"rank", "dist_index", "family", "sigma_t", "sse"};
      for (std::size_t r = 0; r < ranked.size(); ++r) {
        rt.add_row({std::to_string(r + 1), std::to_string(ranked[r].dist_index), ranked[r].family,
                    io::format_double(ranked[r].sigma_t), io::format_double(ranked[r].sse)});
      }
      out.write_table("transfer_ranking.csv", rt);
      if (!ranked.empty()) {
        log << "closest to measured data: " << ranked.front().family
            << " sigma_t = " << ranked.front().sigma_t << " (sse " << ranked.front().sse << ")\n";
      }
    }
    return static_cast<int>(Success);
  });
}

inline int cmd_cv_sweep(const config::ExperimentConfig& cfg, std::ostream& log) {
  require(cfg.v_gs.size() == 1, ErrorCode::ConfigError,
          "cv-sweep needs a single v_gs; set it in the config or pass --vgs");
  RunOutputs out("cv-sweep", cfg.snapshot, cfg.output_dir, cfg.seed);
  return with_manifest(out, [&] {
    const auto dists = cfg.threshold_dists();
    const double v_gs = cfg.v_gs.front();
    const auto sweep =
        cv_sweep(cfg.circuit, v_gs, cfg.sigma_t, cfg.sigma_t_unit, dists, cfg.series, cfg.parallelism);
    io::Table t;
    t.columns = {"dist_index", "family", "sigma_t", "status", "mean_isi", "cv", "note"};
    for (const auto& p : sweep.points) {
      t.add_row({std::to_string(p.dist_index), family_name(dists[p.dist_index]),
                 io::format_double(p.sigma_t), to_string(p.status), io::format_double(p.mean),
                 io::format_double(p.cv), cell_text(p.detail)});
    }
    std::vector<std::pair<std::string, std::string>> extra{{"v_gs", io::format_double(v_gs)}};
    if (cfg.measured.cv) {
      const auto measured = io::Table::load(*cfg.measured.cv);
      const auto values = measured.numeric_column("cv");
      require(!values.empty(), ErrorCode::ConfigError, "measured CV file has no rows");
      double pooled = 0.0;
      for (double v : values) pooled += v;
      pooled /= static_cast<double>(values.size());
      extra.emplace_back("measured_cv", io::format_double(pooled));
      log << "measured CV reference: " << pooled << "\n";
    }
    out.write_table("cv_sweep.csv", t, extra);
    for (std::size_t d = 0; d < dists.size(); ++d) {
      // Onset: smallest grid σ_t from which every larger point converged.
      std::optional<double> onset;
      for (std::size_t s = sweep.sigma_t.size(); s-- > 0;) {
        if (sweep.at(d, s).status != SweepStatus::Converged) break;
        onset = sweep.sigma_t[s];
      }
      log << family_name(dists[d]) << ": ";
      if (onset) {
        log << "converged for sigma_t >= " << *onset << "\n";
      } else {
        log << "not converged at the top of the grid\n";
      }
    }
    return static_cast<int>(Success);
  });
}

struct CheckResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Cross-oracle battery on the unit process plus the boundary averaging.
inline std::vector<CheckResult> run_validation(const config::ExperimentConfig& cfg,
                                               std::ostream& log) {
  SeriesControl ctl = cfg.series;
  ctl.rho2_corruption = cfg.validate.rho2_corruption;
  std::vector<CheckResult> checks;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };

  {
    double e1 = 0.0, e2 = 0.0;
    const double starts[] = {-5.0, -3.0, -1.0, 0.0, 2.0, 4.0};
    const double bounds[] = {-4.0, -2.0, 0.0, 1.0, 2.5, 4.0, 5.0};
    for (double S : bounds) {
      for (double x0 : starts) {
        if (x0 >= S) continue;
        const auto tau = tau_moments_unit(S, x0, 2, ctl);
        e1 = std::max(e1, rel(tau[1], oracle::siegert_tau1(S, x0)));
        e2 = std::max(e2, rel(tau[2], oracle::siegert_tau2(S, x0)));
      }
    }
    checks.push_back({"siegert_tau1", e1, 1e-6, e1 <= 1e-6});
    checks.push_back({"siegert_tau2", e2, 1e-6, e2 <= 1e-6});
  }
  {
    double e = 0.0;
    for (double z : {-4.0, -1.0, 1.0, 3.0, 5.0}) {
      const double q = static_cast<double>(oracle::quadrature_phi2(z));
      e = std::max(e, rel(phi_k(z, 2, ctl), q));
    }
    checks.push_back({"phi2_quadrature", e, 1e-6, e <= 1e-6});
  }
  {
    double worst = 0.0;
    std::uint64_t seed = cfg.seed;
    for (const auto& [S, x0] : std::vector<std::pair<double, double>>{{1.0, 0.0}, {2.0, -1.0}}) {
      const auto mc = oracle::unit_ou_passage_moments(S, x0, cfg.validate.mc_trials,
                                                      cfg.validate.mc_dt, seed++, cfg.parallelism);
      const auto tau = tau_moments_unit(S, x0, 2, ctl);
      worst = std::max(worst, std::abs(tau[1] - mc.tau1.value) / mc.tau1.std_error);
      worst = std::max(worst, std::abs(tau[2] - mc.tau2.value) / mc.tau2.std_error);
    }
    checks.push_back({"monte_carlo_sigmas", worst, 3.0, worst <= 3.0});
  }
  {
    double e = 0.0;
    const dist::TwoPoint laws[] = {{-1.0, 2.0, 0.3}, {0.5, 3.0, 0.5}, {-2.0, 1.0, 0.8}};
    for (const auto& law : laws) {
      const double x0 = -3.0;
      const auto mix = expected_tau_unit(law, x0, 3, ctl);
      const auto a = tau_moments_unit(law.low, x0, 3, ctl);
      const auto b = tau_moments_unit(law.high, x0, 3, ctl);
      for (int m = 1; m <= 3; ++m) {
        e = std::max(e, rel(mix[m], law.p_low * a[m] + (1 - law.p_low) * b[m]));
      }
    }
    checks.push_back({"tower_rule", e, 1e-8, e <= 1e-8});
  }
  {
    double e = 0.0;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      OuParams ou{0.0, std::exp(-4.0 + 8.0 * u(rng)), std::exp(-3.0 + 5.0 * u(rng))};
      const double a = ou.alpha();
      const double S = (-3.0 + 7.0 * u(rng)) / a;
      const double x0 = S - (0.1 + 4.0 * u(rng)) / a;
      for (int m = 1; m <= 2; ++m) {
        const double direct = tau_m_scaled(S, x0, m, ou, ctl);
        const double unit = std::pow(ou.theta, m) * tau_m_unit(a * S, a * x0, m, ctl);
        e = std::max(e, rel(direct, unit));
      }
    }
    checks.push_back({"scaling_law", e, 1e-12, e <= 1e-12});
  }
  for (const auto& c : checks) {
    log << (c.pass ? "PASS " : "FAIL ") << c.name << ": error " << c.error << " (tolerance "
        << c.tolerance << ")\n";
  }
  return checks;
}

inline int cmd_validate(const config::ExperimentConfig& cfg, std::ostream& log) {
  check_sim(cfg);
  RunOutputs out("validate", cfg.snapshot, cfg.output_dir, cfg.seed);
  return with_manifest(out, [&] {
    const auto checks = run_validation(cfg, log);
    io::Table t;
    t.columns = {"check", "error", "tolerance", "status"};
    bool ok = true;
    for (const auto& c : checks) {
      t.add_row({c.name, io::format_double(c.error), io::format_double(c.tolerance),
                 c.pass ? "pass" : "fail"});
      ok = ok && c.pass;
    }
    out.write_table("validation.csv", t);
    return static_cast<int>(ok ? Success : ValidationFailure);
  });
}

inline int cmd_simulate(const config::ExperimentConfig& cfg, std::ostream& log) {
  RunOutputs out("simulate", cfg.snapshot, cfg.output_dir, cfg.seed);
  return with_manifest(out, [&] {
    const double v_gs = cfg.v_gs.front();
    const NoiseSpec noise{cfg.sigma_t.front(), cfg.sigma_t_unit, cfg.threshold_dists().front()};
    SimConfig sim = cfg.sim;
    sim.record_stride = std::max(1, sim.record_stride);
    SpikeTrain train;
    if (sim.model == SimModel::FhnCaricature) {
      // The caricature runs in time units of L; convert there and back.
      const auto p = fhn_from_circuit(cfg.circuit, v_gs);
      const double L = cfg.circuit.L;
      SimConfig scaled = sim;
      scaled.dt = sim.dt / L;
      scaled.duration = sim.duration / L;
      const auto fp = fixed_points(cfg.circuit, v_gs);
      auto rows = simulate_fhn(p, noise.physical_sigma() / std::sqrt(L), scaled, 0.0,
                               cfg.circuit.v_dd - fp.s1.device_voltage);
      // Spikes are read off the device voltage v_dd − w with a two-level trigger.
      const auto& dev = cfg.circuit.device;
      const double span = dev.v_h_nominal - dev.v_l;
      const double fire = dev.v_l + 0.8 * span, rearm = dev.v_l + 0.2 * span;
      bool armed = false;
      for (auto& row : rows) {
        row.t *= L;
        const double v_dev = cfg.circuit.v_dd - row.w;
        if (v_dev <= rearm) armed = true;
        if (armed && v_dev >= fire) {
          train.spike_times.push_back(row.t);
          armed = false;
        }
      }
      train.derive_isis();
      out.write_table("trace.csv", io::trace_table(rows));
    } else {
      check_sim(cfg);
      if (sim.model == SimModel::Full2D) {
        const auto r = simulate_full(cfg.circuit, v_gs, noise, sim);
        train = r.train;
        out.write_table("trace.csv", io::trace_table(r.trace));
      } else {
        const auto r = simulate_reduced_traced(cfg.circuit, v_gs, noise, sim);
        train = r.train;
        out.write_table("trace.csv", io::trace_table(r.trace));
      }
    }
    out.write_values("spikes.txt", train.spike_times);
    log << "simulate (" << to_string(sim.model) << "): " << train.spike_times.size() << " spikes";
    if (train.isis.size() >= 2) {
      double m = 0.0, ss = 0.0;
      for (double x : train.isis) m += x;
      m /= static_cast<double>(train.isis.size());
      for (double x : train.isis) ss += (x - m) * (x - m);
      log << ", mean ISI " << m << " s, CV "
          << std::sqrt(ss / static_cast<double>(train.isis.size())) / m;
    }
    log << "\n";
    return static_cast<int>(Success);
  });
}

struct FitRequest {
  std::vector<std::filesystem::path> samples;
  FitFamily family = FitFamily::ExpPower;
  double kappa = 3.0;
  std::filesystem::path out = "out";
};

struct GroupSummary {
  std::string source;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
  double iqr = 0.0;
  double iqr_se = 0.0;
};

inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(v.size() - 1, lo + 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline GroupSummary summarize(const std::string& source, const std::vector<double>& v) {
  GroupSummary g;
  g.source = source;
  g.n = v.size();
  if (v.empty()) return g;
  for (double x : v) g.mean += x;
  g.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - g.mean) * (x - g.mean);
  g.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  g.iqr = quantile(v, 0.75) - quantile(v, 0.25);
  // Large-sample standard error of the IQR of a normal sample.
  g.iqr_se = 1.573 * g.std / std::sqrt(static_cast<double>(v.size()));
  return g;
}

/// Whether every pair of groups has IQRs within three combined standard errors.
inline bool spreads_consistent(const std::vector<GroupSummary>& groups) {
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const double se = std::hypot(groups[i].iqr_se, groups[j].iqr_se);
      if (std::abs(groups[i].iqr - groups[j].iqr) > 3.0 * se) return false;
    }
  }
  return true;
}

inline int cmd_fit_threshold(const FitRequest& req, std::ostream& log) {
  require(!req.samples.empty(), ErrorCode::ConfigError, "fit-threshold needs a samples file");
  config::Json snapshot;
  snapshot["family"] = req.family == FitFamily::Gaussian ? "gaussian" : "ep";
  snapshot["kappa"] = req.kappa;
  snapshot["samples"] = config::Json::array();
  for (const auto& p : req.samples) snapshot["samples"].push_back(p.string());
  std::vector<double> pooled;
  std::vector<GroupSummary> groups;
  for (const auto& p : req.samples) {
    const auto v = io::load_values(p);
    groups.push_back(summarize(p.filename().string(), v));
    pooled.insert(pooled.end(), v.begin(), v.end());
  }
  const auto fitted = fit(pooled, req.family, req.kappa);
  RunOutputs out("fit-threshold", snapshot, req.out, 0);
  return with_manifest(out, [&] {
    const auto spec = config::dist_json(fitted);
    out.write("threshold_fit.json", spec.dump(2) + "\n");
    io::Table t;
    t.columns = {"source", "n", "mean", "std", "iqr", "iqr_se"};
    for (const auto& g : groups) {
      t.add_row({cell_text(g.source), std::to_string(g.n), io::format_double(g.mean),
                 io::format_double(g.std), io::format_double(g.iqr), io::format_double(g.iqr_se)});
    }
    const bool consistent = spreads_consistent(groups);
    out.write_table("threshold_groups.csv", t,
                    {{"pooled_samples", std::to_string(pooled.size())},
                     {"spread_consistent", consistent ? "yes" : "no"}});
    log << "fitted " << family_name(fitted) << ": " << spec.dump() << "\n";
    if (groups.size() > 1) {
      log << "group spreads " << (consistent ? "agree" : "differ")
          << " within sampling noise across " << groups.size() << " files\n";
    }
    return static_cast<int>(Success);
  });
}

}  // namespace imt::harness
