#include "pcns/diagnostics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>

namespace pcns {

namespace {

double state_kinetic(const Problem& pb, const State& s, Eigen::VectorXd& rho_nodes) {
  const GalerkinSpace& sp = *pb.space;
  rho_nodes = sp.density_at_nodes(s.density);
  Eigen::VectorXd v1, v2;
  sp.velocity_at_nodes(s.velocity, v1, v2);
  double k = 0.0;
  for (int q = 0; q < rho_nodes.size(); ++q) {
    const double rpos = rho_nodes[q] > 0 ? rho_nodes[q] : 0.0;
    k += sp.grid().w[q] * 0.5 * (pb.eps + rpos) * (v1[q] * v1[q] + v2[q] * v2[q]);
  }
  return k;
}

// Numerator / denominator of the packing-overshoot fraction for one state.
void overshoot_parts(const Problem& pb, const State& s, double& over, double& mass) {
  const GalerkinSpace& sp = *pb.space;
  const Eigen::VectorXd rho = sp.density_at_nodes(s.density);
  over = 0.0;
  mass = 0.0;
  const double rmax = pb.pressure.rho_max;
  for (int q = 0; q < rho.size(); ++q) {
    const double w = sp.grid().w[q];
    mass += w * rho[q];
    if (rho[q] >= rmax) over += w * rho[q];
  }
}

}  // namespace

BoundsMonitor monitor_bounds(const Problem& pb, const Trajectory& traj) {
  BoundsMonitor m;
  m.rho_min = std::numeric_limits<double>::infinity();
  m.rho_max = -std::numeric_limits<double>::infinity();
  double prev_pressure = 0.0, prev_time = 0.0;
  bool have_prev = false;
  for (const State& s : traj.states) {
    if (!s.density.allFinite() || !s.velocity.allFinite()) m.all_finite = false;
    Eigen::VectorXd rho;
    const double kin = state_kinetic(pb, s, rho);
    m.rho_min = std::min(m.rho_min, rho.minCoeff());
    m.rho_max = std::max(m.rho_max, rho.maxCoeff());
    m.kinetic_sup = std::max(m.kinetic_sup, kin);
    double pint = 0.0;
    for (int q = 0; q < rho.size(); ++q) {
      const double rpos = rho[q] > 0 ? rho[q] : 0.0;
      pint += pb.space->grid().w[q] * pb.reg_pressure.value(rpos);
    }
    if (have_prev)
      m.pressure_integral += 0.5 * (s.time - prev_time) * (pint + prev_pressure);
    prev_pressure = pint;
    prev_time = s.time;
    have_prev = true;
  }
  for (const StepInfo& st : traj.steps)
    m.dissipation_integral += st.ledger.dt * st.ledger.dissipation;
  m.overshoot = overshoot_metric(pb, traj);
  if (!std::isfinite(m.kinetic_sup) || !std::isfinite(m.pressure_integral) ||
      !std::isfinite(m.dissipation_integral))
    m.all_finite = false;
  return m;
}

namespace {

double collar_ratio(const Trajectory& traj, double diss_weight, bool add_friction) {
  double worst = 0.0;
  for (const StepInfo& st : traj.steps) {
    const double r1 = st.ledger.trilinear;
    double denom = st.ledger.dissipation;
    if (add_friction) denom += st.ledger.friction;
    denom *= diss_weight;
    double ratio;
    if (denom > 0)
      ratio = r1 / denom;
    else
      ratio = r1 > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    worst = std::max(worst, ratio);
  }
  return worst;
}

}  // namespace

double collar_convection_ratio(const Trajectory& traj) {
  return collar_ratio(traj, 0.25, false);
}

double collar_damping_ratio(const Trajectory& traj) {
  return collar_ratio(traj, 0.5, true);
}

double korn_poincare_constant(const GalerkinSpace& space, double mu, double eta) {
  const Eigen::MatrixXd diss =
      mu * space.dissipation_shear() + eta * space.dissipation_dilation();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
      diss, space.vector_h1_gram(), Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success)
    throw NumericError("generalized eigenproblem for the dissipation form failed");
  const double lam = ges.eigenvalues().minCoeff();
  if (!(lam > 0))
    throw NumericError("dissipation form is not positive definite on the velocity space");
  return 1.0 / lam;
}

double overshoot_metric(const Problem& pb, const State& s) {
  double over = 0.0, mass = 0.0;
  overshoot_parts(pb, s, over, mass);
  return mass > 0 ? over / mass : 0.0;
}

double overshoot_metric(const Problem& pb, const Trajectory& traj) {
  double over_int = 0.0, mass_int = 0.0;
  double prev_over = 0.0, prev_mass = 0.0, prev_time = 0.0;
  bool have_prev = false;
  for (const State& s : traj.states) {
    double over = 0.0, mass = 0.0;
    overshoot_parts(pb, s, over, mass);
    if (have_prev) {
      const double dt = s.time - prev_time;
      over_int += 0.5 * dt * (over + prev_over);
      mass_int += 0.5 * dt * (mass + prev_mass);
    }
    prev_over = over;
    prev_mass = mass;
    prev_time = s.time;
    have_prev = true;
  }
  return mass_int > 0 ? over_int / mass_int : 0.0;
}

namespace {

// Action of the spatial continuity form on every scalar basis function at one
// state: coefficients of z -> -int rho u.grad z + wall fluxes + eps terms.
// Assembled matrix-free from node values; independent of the stepper's
// operator assembly path.
Eigen::VectorXd continuity_form_action(const Problem& pb, const State& s) {
  const GalerkinSpace& sp = *pb.space;
  const QuadratureGrid& g = sp.grid();
  const TransportField f = evaluate_transport(sp, *pb.extension, s.velocity, s.time);
  const Eigen::VectorXd rho = sp.density_at_nodes(s.density);
  Eigen::VectorXd rx, ry;
  sp.density_gradient_at_nodes(s.density, rx, ry);

  const Eigen::ArrayXd w = g.w.array();
  const Eigen::ArrayXd r = rho.array();
  Eigen::VectorXd act =
      -(sp.scalar_dx().transpose() * (w * r * f.u1.array()).matrix()) -
      (sp.scalar_dy().transpose() * (w * r * f.u2.array()).matrix()) +
      pb.eps * (sp.scalar_values().transpose() * (w * r).matrix()) +
      pb.eps * (sp.scalar_dx().transpose() * (w * rx.array()).matrix()) +
      pb.eps * (sp.scalar_dy().transpose() * (w * ry.array()).matrix());

  const WallQuadrature& wq = sp.wall();
  const Eigen::VectorXd rho_b = sp.density_at_walls(s.density);
  Eigen::VectorXd wall_flux(wq.size());
  for (int b = 0; b < wq.size(); ++b) {
    const double un = f.wall_un[b];
    wall_flux[b] = wq.w[b] * (un >= 0 ? rho_b[b] * un
                                      : pb.data->inflow_density(s.time, wq.x[b]) * un);
  }
  act.noalias() += sp.scalar_wall_values().transpose() * wall_flux;
  return act;
}

}  // namespace

WeakResiduals weak_residuals(const Problem& pb, const Trajectory& traj, int count,
                             std::uint64_t seed) {
  WeakResiduals out;
  if (count <= 0 || traj.states.size() < 2) return out;
  const GalerkinSpace& sp = *pb.space;
  const int sd = sp.scalar_dim();
  const int vd = sp.vector_dim();
  const double period = pb.period();
  const std::size_t nstate = traj.states.size();

  // Test-function inventory: spatial coefficient vectors plus a Fourier pair
  // of time profiles psi(t) = 1 + c cos(2 pi t/T) + s sin(2 pi t/T).
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  std::vector<Eigen::VectorXd> zs(count, Eigen::VectorXd::Zero(sd));
  std::vector<Eigen::VectorXd> ws(count, Eigen::VectorXd::Zero(vd));
  std::vector<double> psi_c(count, 0.0), psi_s(count, 0.0);

  // Deterministic first entry: the constant function in space, constant in
  // time; its continuity residual is the accumulated mass-identity defect.
  for (int i = 0; i < sd; ++i) {
    const ModeLabel& m = sp.scalar_modes()[i];
    if (m.x_kind == XKind::Constant && m.y_mode == 0)
      zs[0][i] = std::sqrt(sp.domain().area());
  }
  ws[0][0] = 1.0;
  for (int j = 1; j < count; ++j) {
    for (int i = 0; i < sd; ++i) {
      const ModeLabel& m = sp.scalar_modes()[i];
      zs[j][i] = gauss(rng) / (1.0 + m.x_wave * m.x_wave + m.y_mode * m.y_mode);
    }
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < sp.profile_dim(); ++i) {
        const ModeLabel& m = sp.profile_modes()[i];
        ws[j][c * sp.profile_dim() + i] =
            gauss(rng) / (1.0 + m.x_wave * m.x_wave + m.y_mode * m.y_mode);
      }
    psi_c[j] = unif(rng);
    psi_s[j] = unif(rng);
  }
  auto psi = [&](int j, double t) {
    constexpr double kPi = 3.14159265358979323846;
    const double ang = 2.0 * kPi * t / period;
    return 1.0 + psi_c[j] * std::cos(ang) + psi_s[j] * std::sin(ang);
  };

  // Per-state pairings shared by all test functions.
  const int pd = sp.profile_dim();
  std::vector<Eigen::VectorXd> cont_pair(nstate), mom_pair(nstate);
  std::vector<Eigen::VectorXd> cont_form(nstate), mom_form(nstate);
  for (std::size_t k = 0; k < nstate; ++k) {
    const State& s = traj.states[k];
    // <rho, z_i> for every scalar mode.
    cont_pair[k] = sp.scalar_gram() * s.density;
    // <(eps + rho^+) v, phi_i> for every vector mode, via node values.
    const Eigen::VectorXd rho = sp.density_at_nodes(s.density);
    Eigen::VectorXd v1, v2;
    sp.velocity_at_nodes(s.velocity, v1, v2);
    Eigen::ArrayXd wt = sp.grid().w.array() * (pb.eps + rho.array().max(0.0));
    Eigen::VectorXd mp(vd);
    mp.head(pd) = sp.profile_values().transpose() * (wt * v1.array()).matrix();
    mp.tail(pd) = sp.profile_values().transpose() * (wt * v2.array()).matrix();
    mom_pair[k] = mp;
    if (k > 0) {
      cont_form[k] = continuity_form_action(pb, s);
      mom_form[k] = assemble_momentum_rhs(sp, *pb.extension, pb.reg_pressure, pb.friction,
                                          s.density, s.velocity, s.time, pb.eps);
    }
  }

  out.continuity.assign(count, 0.0);
  out.momentum.assign(count, 0.0);
  for (int j = 0; j < count; ++j) {
    double rc = 0.0, rm = 0.0;
    for (std::size_t k = 0; k + 1 < nstate; ++k) {
      const double t0 = traj.states[k].time;
      const double t1 = traj.states[k + 1].time;
      const double dpsi = psi(j, t1) - psi(j, t0);
      const double p1 = psi(j, t1);
      const double dt = t1 - t0;
      rc += -dpsi * zs[j].dot(cont_pair[k]) + dt * p1 * zs[j].dot(cont_form[k + 1]);
      rm += -dpsi * ws[j].dot(mom_pair[k]) - dt * p1 * ws[j].dot(mom_form[k + 1]);
    }
    out.continuity[j] = rc;
    out.momentum[j] = rm;
  }
  return out;
}

ComplianceReport check_compliance(const Problem& pb, const Trajectory& traj,
                                  const ComplianceThresholds& thr) {
  (void)pb;
  ComplianceReport rep;
  for (const StepInfo& st : traj.steps) {
    const EnergyLedgerRow& r = st.ledger;
    rep.max_ledger_residual = std::max(rep.max_ledger_residual, std::abs(r.residual));
    rep.max_mass_defect = std::max(rep.max_mass_defect, std::abs(r.mass_defect));
    if (thr.ledger_band_coeff > 0 && std::abs(r.residual) > thr.ledger_band_coeff * r.dt)
      rep.ledger_band_ok = false;
    const double slack = thr.nonneg_tol * std::max(1.0, std::abs(r.energy));
    const bool signs = r.eps_term >= -slack && r.outflow_potential_flux >= -slack &&
                       r.dissipation >= -slack && r.friction >= -slack &&
                       r.eps_kinetic >= -slack && r.convexity_remainder >= -slack &&
                       r.inflow_potential_flux <= slack;
    if (!signs) rep.ledger_signs_ok = false;
    if (std::abs(r.mass_defect) > thr.mass_tol) rep.mass_ok = false;
  }
  rep.convection_ratio = collar_convection_ratio(traj);
  rep.damping_ratio = collar_damping_ratio(traj);
  rep.collar_convection_ok = rep.convection_ratio <= thr.ratio_limit;
  rep.collar_damping_ok = rep.damping_ratio <= thr.ratio_limit;
  return rep;
}

}  // namespace pcns
