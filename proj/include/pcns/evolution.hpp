#pragma once

#include "pcns/ledger.hpp"
#include "pcns/problem.hpp"

#include <vector>

namespace pcns {

enum class Scheme { BackwardEulerImex, CrankNicolsonImex };

struct StepperConfig {
  int steps_per_period = 400;
  Scheme scheme = Scheme::BackwardEulerImex;
  /// Sub-iterations tightening the explicit terms of the momentum solve.
  int picard_max = 2;
  double picard_tol = 1e-12;
  /// Advective step restriction; a base step violating it is subdivided.
  /// Nonpositive disables the check.
  double cfl_safety = 0.5;
  /// Halvings allowed when a step fails before the run aborts.
  int max_retries = 5;

  void validate() const;
};

struct StepInfo {
  EnergyLedgerRow ledger;
  int picard_iters = 0;
  int retries = 0;
};

/// States at accepted step boundaries (times strictly increasing, first at
/// the march start, last at start + period) plus per-step ledger rows.
struct Trajectory {
  std::vector<State> states;
  std::vector<StepInfo> steps;

  const State& initial() const { return states.front(); }
  const State& final() const { return states.back(); }
};

/// One implicit density step: solves the linear system of the density
/// equation with transport frozen at the supplied deviation velocity.
/// `extra_load` (optional, may be empty) is added to the load vector;
/// manufactured-solution tests use it to inject residual forcing.
State continuity_step(const Problem& pb, const State& s, double dt,
                      const StepperConfig& cfg,
                      const Eigen::VectorXd& extra_load = Eigen::VectorXd());

/// One momentum step at fixed (already updated) density: weighted mass and
/// dissipation implicit, remaining terms explicit with optional
/// sub-iterations.  `rho_before` supplies the pre-step density for the
/// inertia difference.  Throws NumericError on non-finite iterates.
State momentum_step(const Problem& pb, const State& s_updated_density,
                    const Eigen::VectorXd& rho_before, double dt,
                    const StepperConfig& cfg,
                    const Eigen::VectorXd& extra_load = Eigen::VectorXd());

/// Marches one full period from `start` (Lie splitting: density step, then
/// momentum step), recording ledger rows.  Steps that fail are halved up to
/// cfg.max_retries times.  The returned trajectory keeps the start time of
/// the supplied state.
Trajectory march_period(const Problem& pb, const State& start, const StepperConfig& cfg);

}  // namespace pcns
