#include "pcns/evolution.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace pcns {

void StepperConfig::validate() const {
  if (steps_per_period < 1)
    throw std::invalid_argument("steps_per_period must be at least 1");
  if (picard_max < 1) throw std::invalid_argument("picard_max must be at least 1");
  if (!(picard_tol > 0)) throw std::invalid_argument("picard_tol must be positive");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be nonnegative");
}

namespace {

double implicit_weight(Scheme s) {
  return s == Scheme::BackwardEulerImex ? 1.0 : 0.5;
}

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string(what) + " produced non-finite values");
}

State momentum_step_impl(const Problem& pb, const State& s1,
                         const Eigen::VectorXd& rho_before, double dt,
                         const StepperConfig& cfg, const Eigen::VectorXd& extra_load,
                         int* iters_out) {
  const GalerkinSpace& sp = *pb.space;
  const double theta = implicit_weight(cfg.scheme);
  const double t1 = s1.time;
  const double t0 = t1 - dt;
  const Eigen::VectorXd& b0 = s1.velocity;

  const Eigen::MatrixXd m1 =
      assemble_mass_operator(sp, s1.density, pb.eps, pb.negativity_abort);
  const Eigen::MatrixXd m0 =
      assemble_mass_operator(sp, rho_before, pb.eps, pb.negativity_abort);
  const Eigen::MatrixXd& diss = sp.dissipation();

  Eigen::LDLT<Eigen::MatrixXd> lhs(m1 + theta * dt * diss);
  if (lhs.info() != Eigen::Success)
    throw NumericError("momentum step: implicit operator factorization failed");

  Eigen::VectorXd base = m0 * b0;
  if (theta < 1.0) base.noalias() -= (1.0 - theta) * dt * (diss * b0);
  if (extra_load.size() > 0) base += dt * extra_load;

  // Density/time at which the explicit terms are assembled.
  const double ta = t0 + theta * dt;
  const Eigen::VectorXd rho_a = theta * s1.density + (1.0 - theta) * rho_before;

  Eigen::VectorXd b_tilde = b0;
  Eigen::VectorXd b_new = b0;
  int iters = 0;
  for (int it = 0; it < cfg.picard_max; ++it) {
    // Velocity the explicit terms see: end-state estimate for backward Euler,
    // trapezoid average for Crank-Nicolson.
    const Eigen::VectorXd b_assembly = theta * b_tilde + (1.0 - theta) * b0;
    Eigen::VectorXd rhs = assemble_momentum_rhs(sp, *pb.extension, pb.reg_pressure,
                                                pb.friction, rho_a, b_assembly, ta, pb.eps);
    // The assembled right side subtracts the full dissipation of b_assembly;
    // restore it so the viscous term lives only in the implicit operator.
    rhs.noalias() += diss * b_assembly;
    b_new = lhs.solve(base + dt * rhs);
    require_finite(b_new, "momentum step");
    ++iters;
    const double diff = (b_new - b_tilde).norm();
    b_tilde = b_new;
    if (diff <= cfg.picard_tol * std::max(1.0, b_new.norm())) break;
  }
  if (iters_out) *iters_out = iters;
  return State{s1.density, b_new, t1};
}

}  // namespace

State continuity_step(const Problem& pb, const State& s, double dt,
                      const StepperConfig& cfg, const Eigen::VectorXd& extra_load) {
  const GalerkinSpace& sp = *pb.space;
  const double theta = implicit_weight(cfg.scheme);
  const double ta = s.time + theta * dt;

  const TransportField field = evaluate_transport(sp, *pb.extension, s.velocity, ta);
  const ContinuitySystem sys = assemble_continuity_system(sp, field, *pb.extension, ta, pb.eps);

  const Eigen::MatrixXd& gram = sp.scalar_gram();
  Eigen::VectorXd rhs = gram * s.density;
  if (theta < 1.0) rhs.noalias() -= (1.0 - theta) * dt * (sys.op * s.density);
  rhs.noalias() -= dt * sys.load;
  if (extra_load.size() > 0) rhs.noalias() -= dt * extra_load;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(gram + theta * dt * sys.op);
  Eigen::VectorXd a_new = lu.solve(rhs);
  require_finite(a_new, "density step");
  return State{a_new, s.velocity, s.time + dt};
}

State momentum_step(const Problem& pb, const State& s_updated_density,
                    const Eigen::VectorXd& rho_before, double dt, const StepperConfig& cfg,
                    const Eigen::VectorXd& extra_load) {
  return momentum_step_impl(pb, s_updated_density, rho_before, dt, cfg, extra_load, nullptr);
}

namespace {

// One accepted split step with halving on failure; appends states and infos.
void advance_to(const Problem& pb, const StepperConfig& cfg, double t_target, int depth,
                Trajectory& traj) {
  const State& s = traj.states.back();
  const double dt = t_target - s.time;
  try {
    const State mid = continuity_step(pb, s, dt, cfg);
    int iters = 0;
    const State next =
        momentum_step_impl(pb, mid, s.density, dt, cfg, Eigen::VectorXd(), &iters);
    StepInfo info;
    info.ledger = ledger_step(pb, s, next, implicit_weight(cfg.scheme));
    info.picard_iters = iters;
    info.retries = depth;
    traj.states.push_back(next);
    traj.steps.push_back(std::move(info));
  } catch (const NumericError&) {
    if (depth >= cfg.max_retries) throw;
    const double t_mid = s.time + 0.5 * dt;
    advance_to(pb, cfg, t_mid, depth + 1, traj);
    advance_to(pb, cfg, t_target, depth + 1, traj);
  }
}

}  // namespace

Trajectory march_period(const Problem& pb, const State& start, const StepperConfig& cfg) {
  cfg.validate();
  const GalerkinSpace& sp = *pb.space;
  const double period = pb.period();
  const double dt_base = period / cfg.steps_per_period;

  // Smallest length scale the spaces resolve, for the advective restriction.
  const int n = sp.n_modes();
  const double h = std::min(sp.domain().length / (2.0 * n + 1.0),
                            sp.domain().height / (n + 1.0));

  Trajectory traj;
  traj.states.push_back(start);
  for (int i = 1; i <= cfg.steps_per_period; ++i) {
    const double t_i = start.time + period * (static_cast<double>(i) / cfg.steps_per_period);
    int subdivisions = 1;
    if (cfg.cfl_safety > 0) {
      const State& s = traj.states.back();
      const TransportField f = evaluate_transport(sp, *pb.extension, s.velocity, s.time);
      double umax = 0.0;
      for (int q = 0; q < f.u1.size(); ++q)
        umax = std::max(umax, std::hypot(f.u1[q], f.u2[q]));
      if (umax > 0) {
        const double dt_adv = cfg.cfl_safety * h / umax;
        subdivisions = std::max(1, static_cast<int>(std::ceil(dt_base / dt_adv)));
      }
    }
    const double t_prev = traj.states.back().time;
    for (int k = 1; k <= subdivisions; ++k) {
      const double t_sub =
          (k == subdivisions)
              ? t_i
              : t_prev + (t_i - t_prev) * (static_cast<double>(k) / subdivisions);
      advance_to(pb, cfg, t_sub, 0, traj);
    }
  }
  return traj;
}

}  // namespace pcns
