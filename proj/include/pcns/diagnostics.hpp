#pragma once

#include "pcns/evolution.hpp"

#include <cstdint>
#include <vector>

namespace pcns {

/// A-priori bound witnesses over one trajectory.
struct BoundsMonitor {
  double rho_min = 0;
  double rho_max = 0;
  double overshoot = 0;             // see overshoot_metric
  double kinetic_sup = 0;           // sup_t of the kinetic part of E
  double pressure_integral = 0;     // time integral of int p_delta(rho)
  double dissipation_integral = 0;  // time integral of the dissipation term
  bool all_finite = true;
};

BoundsMonitor monitor_bounds(const Problem& pb, const Trajectory& traj);

/// Largest per-step ratio of the collar convection term
/// R1 = -int rho v.grad(u_B).v against a quarter of the viscous dissipation.
/// The bound the extension is tuned for holds when the returned value is <= 1.
double collar_convection_ratio(const Trajectory& traj);

/// Same numerator against half of (dissipation + friction); <= 1 certifies
/// the damping reserve used by the absorbing-energy argument.
double collar_damping_ratio(const Trajectory& traj);

/// Discrete Korn-Poincare constant of the dissipation form on the velocity
/// space: 1 / lambda_min of the (dissipation, H^1 Gram) pencil.  Throws
/// NumericError if the form is not positive definite.
double korn_poincare_constant(const GalerkinSpace& space, double mu, double eta);

/// Mass fraction at or above the packing density:
/// time-space integral of rho * indicator(rho >= rho_max) over the
/// trajectory, normalized by the time integral of total mass.
double overshoot_metric(const Problem& pb, const Trajectory& traj);
/// Same integrand for a single state (normalized by its mass).
double overshoot_metric(const Problem& pb, const State& s);

/// Residuals of the time-integrated weak forms on a periodic trajectory,
/// tested against `count` random smooth space-time test functions built on
/// the Galerkin spaces from `seed`.  First entry of each vector is the
/// deterministic constant-in-time test.
struct WeakResiduals {
  std::vector<double> continuity;  // first entry: constant test function (mass closure)
  std::vector<double> momentum;
};

WeakResiduals weak_residuals(const Problem& pb, const Trajectory& traj, int count,
                             std::uint64_t seed);

/// Thresholds for the compliance verdict over a converged orbit.
struct ComplianceThresholds {
  double ledger_band_coeff = 0;       // residual band: coeff * dt; 0 = skip
  double mass_tol = 1e-10;
  double nonneg_tol = 1e-12;          // slack for sign-constrained ledger entries
  double ratio_limit = 1.0;           // collar ratios
};

struct ComplianceReport {
  bool ledger_band_ok = true;
  bool ledger_signs_ok = true;
  bool mass_ok = true;
  bool collar_convection_ok = true;
  bool collar_damping_ok = true;
  double max_ledger_residual = 0;
  double max_mass_defect = 0;
  double convection_ratio = 0;
  double damping_ratio = 0;
  bool ok() const {
    return ledger_band_ok && ledger_signs_ok && mass_ok && collar_convection_ok &&
           collar_damping_ok;
  }
};

ComplianceReport check_compliance(const Problem& pb, const Trajectory& traj,
                                  const ComplianceThresholds& thr);

}  // namespace pcns
