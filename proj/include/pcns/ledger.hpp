#pragma once

#include "pcns/problem.hpp"

#include <array>
#include <string>

namespace pcns {

/// One row of the discrete energy balance.  Every field stores the term with
/// the sign it carries in the balance
///
///   dE/dt + eps_term + inflow_potential_flux + outflow_potential_flux
///         + dissipation + friction + eps_kinetic + convexity_remainder
///   =  trilinear + pressure_dilation + forcing,
///
/// where E = integral (eps+rho)|v|^2/2 + P_delta(rho).  All terms except the
/// energy difference are evaluated at the half step (averaged coefficients,
/// midpoint time).  `residual` is left side minus right side with dE/dt
/// replaced by the step difference quotient; for the implicit stepper it is
/// O(dt) and positive on pure-decay runs.
struct EnergyLedgerRow {
  double time = 0;  // end of step
  double dt = 0;
  double energy = 0;                  // E at end of step
  double eps_term = 0;                // eps * int rho P' + P''|grad rho|^2   >= 0
  double inflow_potential_flux = 0;   // int_walls P(rho_B) [u_B.n]^-         <= 0
  double outflow_potential_flux = 0;  // int_walls P(rho)   [u_B.n]^+         >= 0
  double dissipation = 0;             // int S(grad v):grad v                 >= 0
  double friction = 0;                // int penalty(rho) |v|^2               >= 0
  double eps_kinetic = 0;             // (eps/2) int rho |v|^2                >= 0
  double convexity_remainder = 0;     // -int [P(rho_B)-P'(rho)(rho_B-rho)-P(rho)][u_B.n]^-  >= 0
  double trilinear = 0;               // -int rho v.grad(u_B).v
  double pressure_dilation = 0;       // -int p(rho) div u_B
  double forcing = 0;                 // int (rho g - rho dt(u_B) + div S(grad u_B) - rho u_B.grad(u_B)) . v
  double residual = 0;
  double mass_defect = 0;             // discrete mass identity defect, ~ solver tolerance
  double rho_min = 0, rho_max = 0;    // reconstructed density extrema at nodes
};

/// Column schema of the exported per-step ledger, frozen.
const std::array<std::string, 17>& ledger_schema();
std::array<double, 17> ledger_values(const EnergyLedgerRow& row);

/// Evaluates the balance across one accepted step.  `theta` is the implicit
/// weight of the stepper that produced the pair (1 = backward Euler), used
/// only by the embedded mass identity.
EnergyLedgerRow ledger_step(const Problem& pb, const State& before, const State& after,
                            double theta = 1.0);

/// Defect of the discrete mass identity: testing the density solve with the
/// constant function gives, per step,
///   mass(after) - mass(before) + dt * [wall flux + eps mass](blend) = 0,
///   blend = (theta*after + (1-theta)*before) in coefficients and time,
///   wall flux(state) = int rho_state [u_B.n]^+ + int rho_B [u_B.n]^-,
/// exact up to the linear solver residual (interior transport drops out
/// because the constant has zero gradient and the deviation velocity has
/// zero trace).  The blend matches the state/time at which the stepper
/// assembled the transport operator (theta = 1 backward Euler, 1/2
/// Crank-Nicolson).
double mass_ledger_defect(const Problem& pb, const State& before, const State& after,
                          double theta = 1.0);

double total_mass(const Problem& pb, const State& s);

}  // namespace pcns
