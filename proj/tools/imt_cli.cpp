// Command-line driver for the IMT oscillator experiments.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imt/harness.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::optional<double> v_gs;
  std::optional<double> sigma_t;
  std::optional<std::string> dist;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("-c,--config", a.config, "experiment config (JSON)")->required();
  cmd->add_option("--vgs", a.v_gs, "gate voltage, replaces the config grid");
  cmd->add_option("--sigma-t", a.sigma_t, "noise amplitude, replaces the config grid");
  cmd->add_option("--dist", a.dist,
                  "threshold law: constant | gaussian | ep<kappa> (e.g. ep3), or a JSON object");
  cmd->add_option("--seed", a.seed, "master RNG seed");
  cmd->add_option("-o,--out", a.out, "output directory");
}

imt::config::ExperimentConfig load(const CommonArgs& a) {
  auto cfg = imt::config::load(a.config);
  imt::harness::Overrides o{a.v_gs, a.sigma_t, a.dist, a.seed, std::nullopt};
  if (a.out) o.out = *a.out;
  imt::harness::apply(cfg, o);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic IMT oscillator analysis"};
  app.set_version_flag("--version", imt::harness::kToolVersion);
  app.require_subcommand(1);

  CommonArgs transfer, cv, validate, simulate;
  auto* c_transfer = app.add_subcommand("transfer-curve", "analytic firing rate over the grid");
  add_common(c_transfer, transfer);
  auto* c_cv = app.add_subcommand("cv-sweep", "ISI coefficient of variation against noise");
  add_common(c_cv, cv);
  auto* c_validate = app.add_subcommand("validate", "cross-check the series against oracles");
  add_common(c_validate, validate);
  auto* c_simulate = app.add_subcommand("simulate", "one stochastic trajectory");
  add_common(c_simulate, simulate);

  imt::harness::FitRequest fit;
  std::vector<std::string> samples;
  std::string family = "ep";
  std::string fit_out = "out";
  auto* c_fit = app.add_subcommand("fit-threshold", "fit a threshold law to measured samples");
  c_fit->add_option("-s,--samples", samples, "sample files, one group per file")->required();
  c_fit->add_option("--family", family, "gaussian | ep")
      ->check(CLI::IsMember({"gaussian", "ep"}));
  c_fit->add_option("--kappa", fit.kappa, "shape exponent for the ep family");
  c_fit->add_option("-o,--out", fit_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : imt::harness::ConfigFailure;
  }

  try {
    if (*c_transfer) return imt::harness::cmd_transfer_curve(load(transfer), std::cout);
    if (*c_cv) return imt::harness::cmd_cv_sweep(load(cv), std::cout);
    if (*c_validate) return imt::harness::cmd_validate(load(validate), std::cout);
    if (*c_simulate) return imt::harness::cmd_simulate(load(simulate), std::cout);
    if (*c_fit) {
      for (const auto& s : samples) fit.samples.emplace_back(s);
      fit.family = family == "gaussian" ? imt::FitFamily::Gaussian : imt::FitFamily::ExpPower;
      fit.out = fit_out;
      return imt::harness::cmd_fit_threshold(fit, std::cout);
    }
  } catch (const imt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return imt::harness::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return imt::harness::NumericalFailure;
  }
  return imt::harness::ConfigFailure;
}
