#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "imt/circuit.hpp"
#include "imt/error.hpp"
#include "imt/io.hpp"
#include "imt/series.hpp"
#include "imt/simulator.hpp"
#include "imt/threshold_dist.hpp"

namespace imt::config {

using Json = nlohmann::json;

/// Threshold law as written in a config: family plus spread. A missing mean
/// falls back to the circuit's nominal v_h, a missing std to the default spread.
struct DistSpec {
  std::string family = "constant";  ///< constant | gaussian | ep
  std::optional<double> mean;
  std::optional<double> std;
  double kappa = 3.0;

  ThresholdDist resolve(double default_mean, double default_std) const {
    const double m = mean.value_or(default_mean);
    if (family == "constant") return dist::Constant{m};
    const double s = std.value_or(default_std);
    if (family == "gaussian") return dist::Gaussian{m, s};
    return ep_from_std(m, s, kappa);
  }
};

struct ValidateSettings {
  std::size_t mc_trials = 100000;
  double mc_dt = 0.02;
  double rho2_corruption = 0.0;
};

struct McSettings {
  bool enabled = false;
  std::size_t trials = 8;
};

struct Measured {
  std::optional<std::filesystem::path> transfer_curve;
  std::optional<std::filesystem::path> cv;
  std::vector<std::filesystem::path> thresholds;
};

struct ExperimentConfig {
  ImtCircuit circuit;
  std::vector<double> sigma_t;
  double sigma_t_unit = 1.0;
  double threshold_std = 0.05;
  std::vector<DistSpec> dists;
  std::vector<double> v_gs;
  SimConfig sim;
  SeriesControl series;
  McSettings mc;
  ValidateSettings validate;
  Measured measured;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  unsigned parallelism = 1;
  /// Normalized snapshot of the parsed document, for manifests.
  Json snapshot;

  std::vector<ThresholdDist> threshold_dists() const {
    std::vector<ThresholdDist> out;
    for (const auto& d : dists) {
      out.push_back(d.resolve(circuit.device.v_h_nominal, threshold_std));
    }
    return out;
  }
};

namespace detail {

inline void only_keys(const Json& obj, const std::set<std::string>& allowed,
                      const std::string& where) {
  require(obj.is_object(), ErrorCode::ConfigError, where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    require(allowed.count(key) == 1, ErrorCode::ConfigError,
            "unknown key '" + key + "' in " + where);
  }
}

inline double number(const Json& obj, const std::string& key, const std::string& where) {
  require(obj.contains(key), ErrorCode::ConfigError, where + " is missing '" + key + "'");
  require(obj[key].is_number(), ErrorCode::ConfigError, where + "." + key + " must be a number");
  const double v = obj[key].get<double>();
  require(std::isfinite(v), ErrorCode::ConfigError, where + "." + key + " must be finite");
  return v;
}

inline double number_or(const Json& obj, const std::string& key, double fallback,
                        const std::string& where) {
  return obj.contains(key) ? number(obj, key, where) : fallback;
}

/// A number, a list of numbers, or {start, stop, step}.
inline std::vector<double> grid(const Json& v, const std::string& where) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const auto& e : v) {
      require(e.is_number(), ErrorCode::ConfigError, where + " entries must be numbers");
      out.push_back(e.get<double>());
    }
  } else {
    only_keys(v, {"start", "stop", "step"}, where);
    const double a = number(v, "start", where);
    const double b = number(v, "stop", where);
    const double h = number(v, "step", where);
    require(h > 0.0 && b >= a, ErrorCode::ConfigError, where + " needs step > 0 and stop >= start");
    const auto n = static_cast<long>(std::floor((b - a) / h + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * h);
  }
  require(!out.empty(), ErrorCode::ConfigError, where + " must not be empty");
  for (std::size_t i = 1; i < out.size(); ++i) {
    require(out[i] > out[i - 1], ErrorCode::ConfigError, where + " must be strictly increasing");
  }
  return out;
}

}  // namespace detail

inline ImtCircuit parse_circuit(const Json& j) {
  detail::only_keys(j, {"g_vm", "g_vi", "v_h", "v_l", "v_dd", "L", "C", "g_m", "v_t0", "g_s"},
                    "circuit");
  const std::string w = "circuit";
  ImtCircuit c;
  c.device.g_vm = detail::number(j, "g_vm", w);
  c.device.g_vi = detail::number(j, "g_vi", w);
  c.device.v_h_nominal = detail::number(j, "v_h", w);
  c.device.v_l = detail::number(j, "v_l", w);
  c.v_dd = detail::number(j, "v_dd", w);
  c.L = detail::number_or(j, "L", 0.0, w);
  c.C = detail::number(j, "C", w);
  const bool transistor = j.contains("g_m") || j.contains("v_t0");
  if (j.contains("g_s")) {
    require(!transistor, ErrorCode::ConfigError,
            "circuit takes either g_s or the transistor keys g_m/v_t0, not both");
    c.series = SeriesConductance{detail::number(j, "g_s", w)};
  } else {
    c.series = TransistorModel{detail::number(j, "g_m", w), detail::number(j, "v_t0", w)};
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return c;
}

inline DistSpec parse_dist(const Json& j) {
  if (j.is_string()) {
    DistSpec d;
    const auto s = j.get<std::string>();
    if (s == "constant" || s == "gaussian") {
      d.family = s;
    } else if (s.rfind("ep", 0) == 0 && s.size() > 2) {
      d.family = "ep";
      try {
        d.kappa = io::parse_double(s.substr(2), "distribution shape");
      } catch (const Error&) {
        throw Error(ErrorCode::ConfigError, "bad distribution name '" + s + "'");
      }
    } else {
      throw Error(ErrorCode::ConfigError, "bad distribution name '" + s + "'");
    }
    require(d.kappa >= 2.0, ErrorCode::ConfigError, "EP shape must be >= 2");
    return d;
  }
  detail::only_keys(j, {"family", "mean", "std", "kappa", "scale"}, "distribution");
  require(j.contains("family") && j["family"].is_string(), ErrorCode::ConfigError,
          "distribution needs a string 'family'");
  DistSpec d;
  d.family = j["family"].get<std::string>();
  require(d.family == "constant" || d.family == "gaussian" || d.family == "ep",
          ErrorCode::ConfigError, "distribution family must be constant, gaussian or ep");
  if (j.contains("mean")) d.mean = detail::number(j, "mean", "distribution");
  d.kappa = detail::number_or(j, "kappa", 3.0, "distribution");
  require(d.kappa >= 2.0, ErrorCode::ConfigError, "EP shape must be >= 2");
  if (j.contains("std")) d.std = detail::number(j, "std", "distribution");
  if (j.contains("scale")) {
    require(!j.contains("std"), ErrorCode::ConfigError, "give either std or scale, not both");
    require(d.family == "ep", ErrorCode::ConfigError, "scale applies to the ep family only");
    d.std = detail::number(j, "scale", "distribution") * std::sqrt(ep_unit_variance(d.kappa));
  }
  if (d.std) {
    require(*d.std > 0.0, ErrorCode::ConfigError, "distribution std must be positive");
  }
  return d;
}

/// Spec object for a distribution; parse_dist reads back every family but TwoPoint.
inline Json dist_json(const ThresholdDist& d) {
  return std::visit(Overloaded{
                        [](const dist::Constant& c) {
                          return Json{{"family", "constant"}, {"mean", c.value}};
                        },
                        [](const dist::Gaussian& g) {
                          return Json{{"family", "gaussian"}, {"mean", g.mean}, {"std", g.std}};
                        },
                        [](const dist::ExpPower& e) {
                          return Json{{"family", "ep"},
                                      {"mean", e.mean},
                                      {"std", e.scale * std::sqrt(ep_unit_variance(e.kappa))},
                                      {"kappa", e.kappa}};
                        },
                        [](const dist::TwoPoint& t) {
                          return Json{{"family", "twopoint"},
                                      {"low", t.low},
                                      {"high", t.high},
                                      {"p_low", t.p_low}};
                        },
                    },
                    d);
}

inline SimModel parse_model(const std::string& s) {
  if (s == "full2d") return SimModel::Full2D;
  if (s == "reduced1d") return SimModel::Reduced1D;
  if (s == "fhn") return SimModel::FhnCaricature;
  throw Error(ErrorCode::ConfigError, "sim.model must be full2d, reduced1d or fhn");
}

inline ExperimentConfig parse(const Json& j, const std::filesystem::path& base = ".") {
  detail::only_keys(j,
                    {"circuit", "noise", "dists", "v_gs", "sim", "series", "mc", "validate",
                     "measured", "output_dir", "seed", "parallelism"},
                    "config");
  ExperimentConfig cfg;
  require(j.contains("circuit"), ErrorCode::ConfigError, "config is missing 'circuit'");
  cfg.circuit = parse_circuit(j["circuit"]);

  require(j.contains("noise"), ErrorCode::ConfigError, "config is missing 'noise'");
  const auto& n = j["noise"];
  detail::only_keys(n, {"sigma_t", "sigma_t_unit", "threshold_std"}, "noise");
  require(n.contains("sigma_t"), ErrorCode::ConfigError, "noise is missing 'sigma_t'");
  cfg.sigma_t = detail::grid(n["sigma_t"], "noise.sigma_t");
  for (double s : cfg.sigma_t) {
    require(s >= 0.0, ErrorCode::ConfigError, "noise.sigma_t must be >= 0");
  }
  cfg.sigma_t_unit = detail::number_or(n, "sigma_t_unit", 1.0, "noise");
  require(cfg.sigma_t_unit > 0.0, ErrorCode::ConfigError, "noise.sigma_t_unit must be positive");
  cfg.threshold_std = detail::number_or(n, "threshold_std", 0.05, "noise");
  require(cfg.threshold_std > 0.0, ErrorCode::ConfigError, "noise.threshold_std must be positive");

  if (j.contains("dists")) {
    require(j["dists"].is_array() && !j["dists"].empty(), ErrorCode::ConfigError,
            "dists must be a nonempty list");
    for (const auto& d : j["dists"]) cfg.dists.push_back(parse_dist(d));
  } else {
    cfg.dists.push_back(DistSpec{});
  }

  require(j.contains("v_gs"), ErrorCode::ConfigError, "config is missing 'v_gs'");
  cfg.v_gs = detail::grid(j["v_gs"], "v_gs");

  if (j.contains("sim")) {
    const auto& s = j["sim"];
    detail::only_keys(s, {"dt", "duration", "model", "record_stride"}, "sim");
    cfg.sim.dt = detail::number_or(s, "dt", cfg.sim.dt, "sim");
    cfg.sim.duration = detail::number_or(s, "duration", cfg.sim.duration, "sim");
    if (s.contains("model")) {
      require(s["model"].is_string(), ErrorCode::ConfigError, "sim.model must be a string");
      cfg.sim.model = parse_model(s["model"].get<std::string>());
    }
    if (s.contains("record_stride")) {
      require(s["record_stride"].is_number_integer() && s["record_stride"].get<int>() >= 0,
              ErrorCode::ConfigError, "sim.record_stride must be a nonnegative integer");
      cfg.sim.record_stride = s["record_stride"].get<int>();
    }
  }

  if (j.contains("series")) {
    const auto& s = j["series"];
    detail::only_keys(s, {"rel_tol", "max_terms", "max_abs_argument", "moment_cap"}, "series");
    cfg.series.rel_tol = detail::number_or(s, "rel_tol", cfg.series.rel_tol, "series");
    cfg.series.max_terms = static_cast<int>(
        detail::number_or(s, "max_terms", cfg.series.max_terms, "series"));
    cfg.series.max_abs_argument =
        detail::number_or(s, "max_abs_argument", cfg.series.max_abs_argument, "series");
    cfg.series.moment_cap = static_cast<int>(
        detail::number_or(s, "moment_cap", cfg.series.moment_cap, "series"));
  }
  cfg.series.validate();

  if (j.contains("mc")) {
    const auto& m = j["mc"];
    detail::only_keys(m, {"enabled", "trials"}, "mc");
    if (m.contains("enabled")) {
      require(m["enabled"].is_boolean(), ErrorCode::ConfigError, "mc.enabled must be a boolean");
      cfg.mc.enabled = m["enabled"].get<bool>();
    }
    const double t = detail::number_or(m, "trials", static_cast<double>(cfg.mc.trials), "mc");
    require(t >= 1.0, ErrorCode::ConfigError, "mc.trials must be >= 1");
    cfg.mc.trials = static_cast<std::size_t>(t);
  }

  if (j.contains("validate")) {
    const auto& v = j["validate"];
    detail::only_keys(v, {"mc_trials", "mc_dt", "rho2_corruption"}, "validate");
    const double t =
        detail::number_or(v, "mc_trials", static_cast<double>(cfg.validate.mc_trials), "validate");
    require(t >= 100.0, ErrorCode::ConfigError, "validate.mc_trials must be >= 100");
    cfg.validate.mc_trials = static_cast<std::size_t>(t);
    cfg.validate.mc_dt = detail::number_or(v, "mc_dt", cfg.validate.mc_dt, "validate");
    require(cfg.validate.mc_dt > 0.0 && cfg.validate.mc_dt <= 0.1, ErrorCode::ConfigError,
            "validate.mc_dt must lie in (0, 0.1]");
    cfg.validate.rho2_corruption =
        detail::number_or(v, "rho2_corruption", 0.0, "validate");
  }

  if (j.contains("measured")) {
    const auto& m = j["measured"];
    detail::only_keys(m, {"transfer_curve", "cv", "thresholds"}, "measured");
    auto path_of = [&](const Json& v, const std::string& where) {
      require(v.is_string(), ErrorCode::ConfigError, where + " must be a path string");
      std::filesystem::path p = v.get<std::string>();
      if (p.is_relative()) p = base / p;
      require(std::filesystem::exists(p), ErrorCode::ConfigError,
              where + " file not found: " + p.string());
      return p;
    };
    if (m.contains("transfer_curve")) {
      cfg.measured.transfer_curve = path_of(m["transfer_curve"], "measured.transfer_curve");
    }
    if (m.contains("cv")) cfg.measured.cv = path_of(m["cv"], "measured.cv");
    if (m.contains("thresholds")) {
      require(m["thresholds"].is_array(), ErrorCode::ConfigError,
              "measured.thresholds must be a list");
      for (const auto& p : m["thresholds"]) {
        cfg.measured.thresholds.push_back(path_of(p, "measured.thresholds"));
      }
    }
  }

  if (j.contains("output_dir")) {
    require(j["output_dir"].is_string(), ErrorCode::ConfigError, "output_dir must be a string");
    cfg.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("seed")) {
    require(j["seed"].is_number_unsigned(), ErrorCode::ConfigError,
            "seed must be a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  cfg.sim.seed = cfg.seed;
  if (j.contains("parallelism")) {
    require(j["parallelism"].is_number_unsigned(), ErrorCode::ConfigError,
            "parallelism must be a nonnegative integer");
    cfg.parallelism = j["parallelism"].get<unsigned>();
  }
  cfg.snapshot = j;
  return cfg;
}

inline ExperimentConfig load(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse(j, base);
}

}  // namespace imt::config
