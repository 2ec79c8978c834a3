#include "pcns/ledger.hpp"

#include <cmath>

namespace pcns {

const std::array<std::string, 17>& ledger_schema() {
  static const std::array<std::string, 17> names = {
      "time",
      "dt",
      "energy",
      "eps_term",
      "inflow_potential_flux",
      "outflow_potential_flux",
      "dissipation",
      "friction",
      "eps_kinetic",
      "convexity_remainder",
      "trilinear",
      "pressure_dilation",
      "forcing",
      "residual",
      "mass_defect",
      "rho_min",
      "rho_max"};
  return names;
}

std::array<double, 17> ledger_values(const EnergyLedgerRow& r) {
  return {r.time,
          r.dt,
          r.energy,
          r.eps_term,
          r.inflow_potential_flux,
          r.outflow_potential_flux,
          r.dissipation,
          r.friction,
          r.eps_kinetic,
          r.convexity_remainder,
          r.trilinear,
          r.pressure_dilation,
          r.forcing,
          r.residual,
          r.mass_defect,
          r.rho_min,
          r.rho_max};
}

namespace {

// Density floor for potential derivatives; keeps the near-vacuum curvature
// finite where undershoot clamped a node to zero.
constexpr double kFloorFactor = 1e-10;

// Wall flux + eps-mass sum of the mass identity at given coefficients/time.
double mass_flux_terms(const Problem& pb, const Eigen::VectorXd& density, double t) {
  const GalerkinSpace& sp = *pb.space;
  const WallQuadrature& wq = sp.wall();
  const Eigen::VectorXd rho_b = sp.density_at_walls(density);
  double flux = 0.0;
  for (int b = 0; b < wq.size(); ++b) {
    const double un = pb.extension->normal_speed(t, wq.x[b], wq.y[b], wq.normal.col(b));
    if (un > 0)
      flux += wq.w[b] * rho_b[b] * un;
    else if (un < 0)
      flux += wq.w[b] * pb.data->inflow_density(t, wq.x[b]) * un;
  }
  const double mass = sp.grid().w.dot(sp.density_at_nodes(density));
  return flux + pb.eps * mass;
}

}  // namespace

EnergyLedgerRow ledger_step(const Problem& pb, const State& before, const State& after,
                            double theta) {
  const GalerkinSpace& sp = *pb.space;
  const QuadratureGrid& g = sp.grid();
  const WallQuadrature& wq = sp.wall();
  const PressurePotential& pot = *pb.potential;
  const double dt = after.time - before.time;
  const double th = 0.5 * (before.time + after.time);

  EnergyLedgerRow row;
  row.time = after.time;
  row.dt = dt;
  row.energy = state_energy(pb, after);
  const double e0 = state_energy(pb, before);

  const Eigen::VectorXd ah = 0.5 * (before.density + after.density);
  const Eigen::VectorXd bh = 0.5 * (before.velocity + after.velocity);

  const Eigen::VectorXd rho = sp.density_at_nodes(ah);
  Eigen::VectorXd rx, ry;
  sp.density_gradient_at_nodes(ah, rx, ry);
  Eigen::VectorXd v1, v2;
  sp.velocity_at_nodes(bh, v1, v2);

  {
    const Eigen::VectorXd rho_end = sp.density_at_nodes(after.density);
    row.rho_min = rho_end.minCoeff();
    row.rho_max = rho_end.maxCoeff();
  }

  const double floor = kFloorFactor * pb.reg_pressure.base.rho_max;
  double eps_term = 0, eps_kin = 0, fric = 0, tri = 0, pdil = 0, forc = 0;
  for (int q = 0; q < g.size(); ++q) {
    const double w = g.w[q];
    const double r = rho[q];
    const double rpos = r > 0 ? r : 0.0;
    const Vec2 v(v1[q], v2[q]);
    const double vv = v.squaredNorm();
    const double grad2 = rx[q] * rx[q] + ry[q] * ry[q];

    const double rP1 = rpos <= floor ? 0.0 : rpos * pot.deriv(rpos);
    const double P2 = pot.second_deriv(rpos > floor ? rpos : floor);
    eps_term += w * (rP1 + P2 * grad2);
    eps_kin += w * rpos * vv;
    fric += w * pb.friction.value(rpos) * vv;

    const ExtensionEval e = pb.extension->eval(th, g.x[q], g.y[q]);
    tri -= w * r * v.dot(e.grad * v);
    pdil -= w * pb.reg_pressure.value(rpos) * e.div;
    const Vec2 f = r * pb.data->body_force(th, g.x[q], g.y[q]) - r * e.dt + e.div_stress -
                   r * (e.grad * e.u);
    forc += w * f.dot(v);
  }
  row.eps_term = pb.eps * eps_term;
  row.eps_kinetic = 0.5 * pb.eps * eps_kin;
  row.friction = fric;
  row.trilinear = tri;
  row.pressure_dilation = pdil;
  row.forcing = forc;
  row.dissipation = bh.dot(sp.dissipation() * bh);

  const Eigen::VectorXd rho_b = sp.density_at_walls(ah);
  double influx = 0, outflux = 0, convex = 0;
  for (int b = 0; b < wq.size(); ++b) {
    const double un = pb.extension->normal_speed(th, wq.x[b], wq.y[b], wq.normal.col(b));
    const double w = wq.w[b];
    const double rpos = rho_b[b] > 0 ? rho_b[b] : 0.0;
    if (un < 0) {
      const double rB = pb.data->inflow_density(th, wq.x[b]);
      influx += w * pot.value(rB) * un;
      const double bracket = pot.convexity_gap(rpos > floor ? rpos : floor, rB);
      convex -= w * bracket * un;
    } else {
      outflux += w * pot.value(rpos) * un;
    }
  }
  row.inflow_potential_flux = influx;
  row.outflow_potential_flux = outflux;
  row.convexity_remainder = convex;

  row.residual = (row.energy - e0) / dt + row.eps_term + row.inflow_potential_flux +
                 row.outflow_potential_flux + row.dissipation + row.friction +
                 row.eps_kinetic + row.convexity_remainder -
                 (row.trilinear + row.pressure_dilation + row.forcing);
  row.mass_defect = mass_ledger_defect(pb, before, after, theta);
  return row;
}

double total_mass(const Problem& pb, const State& s) {
  const GalerkinSpace& sp = *pb.space;
  return sp.grid().w.dot(sp.density_at_nodes(s.density));
}

double mass_ledger_defect(const Problem& pb, const State& before, const State& after,
                          double theta) {
  const double dt = after.time - before.time;
  const Eigen::VectorXd blend =
      theta * after.density + (1.0 - theta) * before.density;
  const double tb = theta * after.time + (1.0 - theta) * before.time;
  return total_mass(pb, after) - total_mass(pb, before) +
         dt * mass_flux_terms(pb, blend, tb);
}

}  // namespace pcns
