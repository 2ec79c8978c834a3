#include "pcns/periodic_solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace pcns {

void FixedPointConfig::validate() const {
  if (max_iterations < 1)
    throw std::invalid_argument("max_iterations must be at least 1");
  if (!(tolerance > 0)) throw std::invalid_argument("tolerance must be positive");
  if (!(damping > 0) || damping > 1.0)
    throw std::invalid_argument("damping must lie in (0, 1]");
  if (anderson_depth < 0)
    throw std::invalid_argument("anderson_depth must be nonnegative");
}

State period_map(const Problem& pb, const State& start, const StepperConfig& cfg) {
  Trajectory traj = march_period(pb, start, cfg);
  State end = traj.final();
  end.time = start.time;
  return end;
}

namespace {

Eigen::VectorXd flatten(const State& s) {
  Eigen::VectorXd v(s.density.size() + s.velocity.size());
  v << s.density, s.velocity;
  return v;
}

State unflatten(const Eigen::VectorXd& v, const State& like) {
  State s;
  s.density = v.head(like.density.size());
  s.velocity = v.tail(like.velocity.size());
  s.time = like.time;
  return s;
}

}  // namespace

FixedPointReport solve_periodic(const Problem& pb, const StepperConfig& step_cfg,
                                const FixedPointConfig& fp_cfg,
                                const std::optional<State>& guess) {
  step_cfg.validate();
  fp_cfg.validate();

  FixedPointReport rep;
  State x = (fp_cfg.initial_guess == InitialGuess::Supplied && guess)
                ? *guess
                : pb.space->zero_state();
  x.time = 0.0;

  // Anderson history: iterate vectors and their map residuals f = F(x) - x.
  std::deque<Eigen::VectorXd> hist_x, hist_f;

  for (int it = 0; it < fp_cfg.max_iterations; ++it) {
    Trajectory traj;
    State fx;
    try {
      traj = march_period(pb, x, step_cfg);
      fx = traj.final();
      fx.time = x.time;
    } catch (const NumericError& e) {
      rep.aborted = true;
      rep.abort_reason = e.what();
      rep.solution = x;
      return rep;
    }
    ++rep.iterations;

    const double energy = state_energy(pb, x);
    const double norm = std::sqrt(state_norm_sq(pb, x));
    const double dist = std::sqrt(state_distance_sq(pb, x, fx));
    if (!std::isfinite(energy) || !std::isfinite(dist)) {
      rep.aborted = true;
      rep.abort_reason = "non-finite iterate";
      rep.solution = x;
      return rep;
    }
    const double residual = dist / std::max(1.0, norm);
    rep.energy_history.push_back(energy);
    rep.residual_history.push_back(residual);
    rep.final_residual = residual;
    rep.solution = x;
    rep.orbit = std::move(traj);
    if (residual <= fp_cfg.tolerance) {
      rep.converged = true;
      return rep;
    }

    const Eigen::VectorXd xv = flatten(x);
    const Eigen::VectorXd fv = flatten(fx) - xv;
    Eigen::VectorXd next = xv + fp_cfg.damping * fv;
    if (fp_cfg.anderson_depth > 0 && !hist_x.empty()) {
      const int m = static_cast<int>(hist_x.size());
      Eigen::MatrixXd df(fv.size(), m), dx(xv.size(), m);
      for (int j = 0; j < m; ++j) {
        df.col(j) = fv - hist_f[j];
        dx.col(j) = xv - hist_x[j];
      }
      const Eigen::VectorXd gamma = df.colPivHouseholderQr().solve(fv);
      if (gamma.allFinite())
        next -= (dx + fp_cfg.damping * df) * gamma;
    }
    if (fp_cfg.anderson_depth > 0) {
      hist_x.push_back(xv);
      hist_f.push_back(fv);
      while (static_cast<int>(hist_x.size()) > fp_cfg.anderson_depth) {
        hist_x.pop_front();
        hist_f.pop_front();
      }
    }
    x = unflatten(next, x);
  }
  return rep;
}

double verify_periodicity(const Problem& pb, const Trajectory& traj) {
  const double dist = std::sqrt(state_distance_sq(pb, traj.initial(), traj.final()));
  const double norm = std::sqrt(state_norm_sq(pb, traj.initial()));
  return dist / std::max(1.0, norm);
}

}  // namespace pcns
