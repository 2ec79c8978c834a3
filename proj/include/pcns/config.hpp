#pragma once

#include "pcns/evolution.hpp"
#include "pcns/periodic_solver.hpp"
#include "pcns/problem.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pcns {

/// Invalid configuration (maps to CLI exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Full run description.  Serializes to a flat JSON document that round-trips
/// losslessly; every numeric default below is the shipped configuration.
struct RunConfig {
  // domain
  double length = 2.0 * 3.14159265358979323846;
  double height = 1.0;
  int quad_x = 0;  // 0 = auto from modes
  int quad_y = 0;

  // resolution
  int modes = 8;

  // physics
  double mu = 0.1;
  double eta = 0.1;
  double rho_max = 1.0;
  double beta = 3.0;
  double pressure_amplitude = 0.5;
  double gravity_x = 0.0;
  double gravity_y = 0.0;

  // regularization
  double eps = 1e-2;
  double delta = 5e-2;
  double gamma_exp = 4.0;
  /// Negative value = auto: 10 * c_KP * sup|grad u_B| * rho_max, doubled until
  /// the damping-reserve check passes.
  double lambda_bar = -1.0;
  double potential_reference_factor = 1e-6;  // reference density / rho_max
  double negativity_abort = 0.1;             // fraction of rho_max

  // boundary data
  double period = 1.0;
  double drift_slope = 0.04;
  double stream_amplitude = 0.1;
  int wavenumber_index = 1;
  double inflow_rho_mean = 0.45;
  double inflow_rho_amp = 0.05;
  double inflow_margin = 0.05;
  double phase0 = 0.0;
  bool autonomous = false;

  // cutoff
  double omega = -1.0;  // negative = auto: height / 8

  // stepper
  int steps_per_period = 400;
  std::string scheme = "backward_euler";  // or "crank_nicolson"
  int picard_max = 2;
  double picard_tol = 1e-12;
  double cfl_safety = 0.5;
  int max_retries = 5;

  // fixed point
  int max_iterations = 200;
  double tolerance = 1e-6;
  double damping = 1.0;
  int anderson_depth = 0;

  // diagnostics
  double ledger_band_coeff = 6.0;  // residual band coeff * dt, calibrated on reference runs
  int weak_residual_count = 3;

  // output
  std::vector<double> snapshot_times = {0.0, 0.25, 0.5, 0.75, 1.0};
  int sample_nx = 48;
  int sample_ny = 17;

  std::uint64_t seed = 20240817;
  bool deterministic = true;

  double resolved_omega() const { return omega > 0 ? omega : height / 8.0; }
  void validate() const;  // throws ConfigError

  StepperConfig stepper() const;
  FixedPointConfig fixed_point() const;
};

RunConfig load_config(const std::string& path);       // throws ConfigError / NumericError
std::string config_to_json(const RunConfig& c);       // pretty, stable key order
RunConfig config_from_json(const std::string& text);  // throws ConfigError

/// Parameter sweep over one axis with an explicit monotone schedule.
struct SweepPlan {
  RunConfig base;
  std::string axis;  // one of: modes, eps, delta, omega, lambda, dt
  std::vector<double> schedule;
  bool warm_start = true;

  void validate() const;  // throws ConfigError
  RunConfig at(int i) const;
};

}  // namespace pcns
