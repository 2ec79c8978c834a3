#pragma once

#include "pcns/galerkin.hpp"
#include "pcns/models.hpp"

#include <memory>

namespace pcns {

/// Everything a march needs: spaces, constitutive models, boundary data and
/// its extension, and the two regularization strengths.
struct Problem {
  std::shared_ptr<const GalerkinSpace> space;
  std::shared_ptr<const BoundaryData> data;
  std::shared_ptr<const VelocityExtension> extension;
  PressureModel pressure;
  RegularizedPressure reg_pressure;
  std::shared_ptr<const PressurePotential> potential;  // for the regularized law
  FrictionPenalty friction;
  ViscosityModel viscosity;
  double eps = 1e-2;
  double delta = 5e-2;
  /// Densities below -negativity_abort abort the step (see mass operator).
  double negativity_abort = 0.1;

  double period() const { return data->period(); }
};

/// Energy of a state: integral of (eps + rho^+)|v|^2/2 + P_delta(rho^+),
/// by the space's quadrature.
double state_energy(const Problem& pb, const State& s);

/// Squared energy norm: integral (eps + rho^+)|v|^2/2 + L2-norm(rho)^2.
double state_norm_sq(const Problem& pb, const State& s);

/// Squared energy-norm distance, kinetic part weighted by the base state's
/// density.
double state_distance_sq(const Problem& pb, const State& base, const State& other);

}  // namespace pcns
