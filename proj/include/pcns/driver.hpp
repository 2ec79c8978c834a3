#pragma once

#include "pcns/config.hpp"
#include "pcns/diagnostics.hpp"
#include "pcns/periodic_solver.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace pcns {

/// CLI exit codes.
enum ExitCode {
  kOk = 0,
  kConfigError = 1,
  kNotConverged = 2,
  kInvariantViolation = 3,
  kIoError = 4,
};

/// Builds the solver input bundle from a validated configuration.  A
/// negative lambda_bar is resolved here (and the resolved value is what
/// run_single echoes back).
Problem make_problem(const RunConfig& cfg);

struct RunResult {
  RunConfig resolved;  // config with auto fields resolved
  FixedPointReport report;
  ComplianceReport compliance;
  BoundsMonitor bounds;
  double korn_constant = 0;
  double runtime_seconds = 0;
  int exit_code = kOk;
};

/// Solves, verifies compliance, and writes report.json, ledger.csv,
/// state_snapshots.json, trajectory.json and resolved_config.json into
/// `out_dir`.  The auto friction coefficient is doubled and the solve re-run
/// (warm-started) if the damping-reserve check fails, up to three times.
/// `quiet` suppresses progress lines.
RunResult run_single(const RunConfig& cfg, const std::filesystem::path& out_dir,
                     bool quiet = false,
                     const std::optional<State>& warm = std::nullopt);

struct SweepRow {
  double value = 0;
  bool converged = false;
  int iterations = 0;
  double residual = 0;
  double energy = 0;
  double overshoot = 0;
  double rho_max_seen = 0;
  double convection_ratio = 0;
  double damping_ratio = 0;
  double mass_defect = 0;
  int exit_code = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  int exit_code = kOk;
};

/// Runs the schedule in order (warm-starting each run from the previous
/// solution when enabled) and writes per-run directories plus
/// sweep_summary.{csv,json} under `out_dir`.
SweepResult run_sweep(const SweepPlan& plan, const std::filesystem::path& out_dir,
                      bool quiet = false);

/// Re-runs diagnostics on a stored run directory; returns the compliance
/// exit code without re-solving.
int check_run(const std::filesystem::path& run_dir, bool quiet = false);

/// Re-emits ledger.csv and state_snapshots.json from a stored trajectory.
void export_timeseries(const std::filesystem::path& run_dir,
                       const std::filesystem::path& out_dir);

// Serialization helpers shared by driver and tests.
void write_ledger_csv(const Trajectory& traj, const std::filesystem::path& file);
void write_trajectory_json(const Trajectory& traj, const std::filesystem::path& file);
Trajectory read_trajectory_json(const std::filesystem::path& file);
void write_snapshots_json(const Problem& pb, const RunConfig& cfg, const Trajectory& traj,
                          const std::filesystem::path& file);
void write_report_json(const RunResult& result, const std::filesystem::path& file);

}  // namespace pcns
