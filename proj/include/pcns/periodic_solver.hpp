#pragma once

#include "pcns/evolution.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pcns {

enum class InitialGuess { Zero, Supplied };

struct FixedPointConfig {
  int max_iterations = 200;
  /// Convergence when dist(F(X), X) <= tolerance * max(1, norm(X)) in the
  /// energy norm.
  double tolerance = 1e-6;
  double damping = 1.0;      // X <- (1-damping) X + damping F(X)
  int anderson_depth = 0;    // 0 disables acceleration
  InitialGuess initial_guess = InitialGuess::Zero;

  void validate() const;
};

struct FixedPointReport {
  bool converged = false;
  bool aborted = false;             // non-finite iterate or step failure
  std::string abort_reason;
  int iterations = 0;
  std::vector<double> residual_history;  // relative energy-norm residuals
  std::vector<double> energy_history;    // absorbing functional E per iterate
  double final_residual = 0;
  State solution;                   // last (best) iterate, time reset to 0
  Trajectory orbit;                 // march of the final iterate
};

/// Period map F: marches one period and returns the end state with its clock
/// reset to the march start, so iterating F always sees identical data times.
State period_map(const Problem& pb, const State& start, const StepperConfig& cfg);

/// Damped (optionally Anderson-accelerated) iteration of the period map.
FixedPointReport solve_periodic(const Problem& pb, const StepperConfig& step_cfg,
                                const FixedPointConfig& fp_cfg,
                                const std::optional<State>& guess = std::nullopt);

/// Energy-norm distance between the first and last state of a trajectory,
/// normalized by max(1, norm(first)).
double verify_periodicity(const Problem& pb, const Trajectory& traj);

}  // namespace pcns
