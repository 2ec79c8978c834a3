#include "pcns/driver.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

namespace {

pcns::RunConfig load_or_default(const std::string& config_path, bool use_default) {
  if (use_default && !config_path.empty())
    throw pcns::ConfigError("pass either --config or --default, not both");
  if (!use_default && config_path.empty())
    throw pcns::ConfigError("a configuration is required: pass --config FILE or --default");
  pcns::RunConfig cfg;
  if (!config_path.empty()) cfg = pcns::load_config(config_path);
  cfg.validate();
  return cfg;
}

template <class Fn>
int run_protected(Fn&& fn) {
  try {
    return fn();
  } catch (const pcns::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return pcns::kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return pcns::kConfigError;
  } catch (const pcns::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return pcns::kNotConverged;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return pcns::kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pcns::kIoError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("PERIODIC_CNS_THREADS"))
    Eigen::setNbThreads(std::max(1, std::atoi(threads)));

  CLI::App app{
      "Time-periodic solutions of the compressible Navier-Stokes channel flow "
      "with hard-sphere pressure (spectral Galerkin + period-map fixed point)"};
  app.require_subcommand(1);

  std::string config_path, axis, run_dir, out_dir = "out";
  bool use_default = false, quiet = false, cold = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = true;
  std::vector<double> schedule;

  CLI::App* solve = app.add_subcommand("solve", "solve one configuration for a periodic orbit");
  solve->add_option("--config", config_path, "JSON configuration file");
  solve->add_flag("--default", use_default, "use the built-in default configuration");
  solve->add_option("--out", out_dir, "output directory (default: out)");
  solve->add_flag("--quiet", quiet, "suppress progress lines");
  solve->add_option("--seed", seed, "override the RNG seed")->each([&](const std::string&) {
    seed_set = true;
  });
  solve->add_flag("--deterministic,!--no-deterministic", deterministic,
                  "scrub wall-clock fields from report.json (default on)");

  CLI::App* sweep = app.add_subcommand("sweep", "solve a monotone schedule along one axis");
  sweep->add_option("--config", config_path, "JSON base configuration file");
  sweep->add_flag("--default", use_default, "use the built-in default configuration");
  sweep->add_option("--axis", axis, "one of: modes, eps, delta, omega, lambda, dt")
      ->required();
  sweep->add_option("--schedule", schedule, "comma-separated axis values, run in order")
      ->required()
      ->delimiter(',');
  sweep->add_option("--out", out_dir, "output directory (default: out)");
  sweep->add_flag("--cold", cold, "disable warm starts between sweep runs");
  sweep->add_flag("--quiet", quiet, "suppress progress lines");

  CLI::App* check = app.add_subcommand("check", "re-verify diagnostics of a stored run");
  check->add_option("run_dir", run_dir, "run directory with resolved_config.json and trajectory.json")
      ->required();
  check->add_flag("--quiet", quiet, "suppress the verdict table");

  CLI::App* exp = app.add_subcommand("export", "re-emit ledger.csv and state snapshots");
  exp->add_option("run_dir", run_dir, "stored run directory")->required();
  exp->add_option("--out", out_dir, "output directory (default: out)");

  CLI::App* defaults = app.add_subcommand("defaults", "print the default configuration JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pcns::kConfigError;
  }

  if (solve->parsed()) {
    return run_protected([&] {
      pcns::RunConfig cfg = load_or_default(config_path, use_default);
      if (seed_set) cfg.seed = seed;
      if (solve->count("--deterministic") > 0) cfg.deterministic = deterministic;
      const pcns::RunResult r = pcns::run_single(cfg, out_dir, quiet);
      return r.exit_code;
    });
  }
  if (sweep->parsed()) {
    return run_protected([&] {
      pcns::SweepPlan plan;
      plan.base = load_or_default(config_path, use_default);
      plan.axis = axis;
      plan.schedule = schedule;
      plan.warm_start = !cold;
      const pcns::SweepResult r = pcns::run_sweep(plan, out_dir, quiet);
      return r.exit_code;
    });
  }
  if (check->parsed()) {
    return run_protected([&] { return pcns::check_run(run_dir, quiet); });
  }
  if (exp->parsed()) {
    return run_protected([&] {
      pcns::export_timeseries(run_dir, out_dir);
      return static_cast<int>(pcns::kOk);
    });
  }
  if (defaults->parsed()) {
    std::cout << pcns::config_to_json(pcns::RunConfig{});
    return pcns::kOk;
  }
  return pcns::kConfigError;
}
