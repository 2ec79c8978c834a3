// Time stepping: exact discrete mass laws, reduction to known linear solves,
// manufactured-forcing convergence orders, an ODE-reference check of the
// momentum stepper, and the advective subdivision logic.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/testkit.hpp"

#include "pcns/driver.hpp"
#include "pcns/evolution.hpp"
#include "pcns/ledger.hpp"

#include <cmath>

using namespace pcns;

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("stepper configuration rejects invalid values") {
  StepperConfig c;
  CHECK_NOTHROW(c.validate());
  c.steps_per_period = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = StepperConfig{};
  c.picard_max = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = StepperConfig{};
  c.picard_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = StepperConfig{};
  c.max_retries = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("closed-system mass follows the exact implicit decay law") {
  // Without boundary driving the only mass sink is the stabilizing reaction
  // term, and testing the density solve with the constant function makes the
  // discrete decay law exact: backward Euler divides the mass by
  // (1 + eps*dt) every step, the trapezoid scheme applies the Cayley ratio.
  RunConfig c = testkit::closed_config();
  for (const char* scheme : {"backward_euler", "crank_nicolson"}) {
    c.scheme = scheme;
    Problem pb = make_problem(c);
    State start = testkit::random_state(*pb.space, 321);
    start.time = 0.0;
    const Trajectory traj = march_period(pb, start, c.stepper());
    REQUIRE(traj.states.size() == traj.steps.size() + 1);
    const bool be = std::string(scheme) == "backward_euler";
    double m_prev = total_mass(pb, traj.states.front());
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
      const double dt = traj.states[k].time - traj.states[k - 1].time;
      REQUIRE(dt > 0.0);
      const double m = total_mass(pb, traj.states[k]);
      const double want = be ? m_prev / (1.0 + pb.eps * dt)
                             : m_prev * (1.0 - 0.5 * pb.eps * dt) /
                                   (1.0 + 0.5 * pb.eps * dt);
      CAPTURE(scheme);
      CAPTURE(k);
      CHECK(std::abs(m - want) < 1e-12);
      m_prev = m;
    }
    // over the whole period the decay compounds to a visible drop
    CHECK(m_prev < total_mass(pb, traj.states.front()));
  }
}

TEST_CASE("driven march closes the per-step mass identity") {
  RunConfig c = testkit::small_config();
  Problem pb = make_problem(c);
  State start = testkit::random_state(*pb.space, 654);
  start.time = 0.0;
  const Trajectory traj = march_period(pb, start, c.stepper());
  REQUIRE(traj.steps.size() >= static_cast<std::size_t>(c.steps_per_period));
  double worst = 0.0;
  for (const StepInfo& st : traj.steps) worst = std::max(worst, std::abs(st.ledger.mass_defect));
  CHECK(worst < 1e-10);
  // recompute the defect independently of the march's own ledger rows
  for (std::size_t k : {std::size_t(1), traj.states.size() / 2, traj.states.size() - 1}) {
    const double d = mass_ledger_defect(pb, traj.states[k - 1], traj.states[k], 1.0);
    CHECK(std::abs(d) < 1e-10);
  }
  // trajectory bookkeeping
  CHECK(traj.initial().time == 0.0);
  CHECK(traj.final().time == doctest::Approx(pb.period()).epsilon(1e-13));
  for (std::size_t k = 1; k < traj.states.size(); ++k)
    CHECK(traj.states[k].time > traj.states[k - 1].time);
}

TEST_CASE("density step with zero transport is the exact diagonal solve") {
  // Closed data and zero deviation velocity reduce the density solve to
  // (Gram + theta dt eps (Gram + Stiffness)) a1 = (Gram - (1-theta) dt eps (...)) a0
  // with an orthonormal basis and diagonal stiffness, so each coefficient
  // evolves by a known scalar factor.
  RunConfig c = testkit::closed_config();
  for (const char* scheme : {"backward_euler", "crank_nicolson"}) {
    c.scheme = scheme;
    Problem pb = make_problem(c);
    const GalerkinSpace& sp = *pb.space;
    State s = testkit::random_state(sp, 77);
    s.velocity.setZero();
    s.time = 0.0;
    const double dt = 0.01;
    const State out = continuity_step(pb, s, dt, c.stepper());
    const double theta = std::string(scheme) == "backward_euler" ? 1.0 : 0.5;
    for (int j = 0; j < sp.scalar_dim(); ++j) {
      const double rate = pb.eps * (1.0 + sp.scalar_stiffness()(j, j));
      const double want =
          s.density[j] * (1.0 - (1.0 - theta) * dt * rate) / (1.0 + theta * dt * rate);
      CAPTURE(scheme);
      CAPTURE(j);
      CHECK(out.density[j] == doctest::Approx(want).epsilon(1e-11).scale(1e-3));
    }
    CHECK(out.time == dt);
    CHECK((out.velocity - s.velocity).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("density stepper converges at its design order on a manufactured path") {
  // Prescribe a smooth coefficient path a*(t) and inject the residual of the
  // semi-discrete system as extra load, so a* solves the forced equation
  // exactly; the marched error against a*(T) must then shrink at first order
  // for backward Euler and second order for the trapezoid scheme.
  RunConfig c = testkit::small_config();
  Problem pb = make_problem(c);
  const GalerkinSpace& sp = *pb.space;
  const double T = pb.period();

  const State base = testkit::random_state(sp, 4242);
  Eigen::VectorXd a_c = base.density;
  Eigen::VectorXd a_s = testkit::random_state(sp, 4243).density;
  a_s[0] -= 0.45 * std::sqrt(sp.domain().area());  // oscillate the fluctuations only
  a_s *= 0.25;
  const auto target = [&](double t) -> Eigen::VectorXd {
    return a_c + std::sin(2.0 * kPi * t / T) * a_s;
  };
  const auto target_dot = [&](double t) -> Eigen::VectorXd {
    return (2.0 * kPi / T) * std::cos(2.0 * kPi * t / T) * a_s;
  };

  for (const char* scheme : {"backward_euler", "crank_nicolson"}) {
    c.scheme = scheme;
    const StepperConfig sc = c.stepper();
    const double theta = std::string(scheme) == "backward_euler" ? 1.0 : 0.5;
    auto march_error = [&](int nsteps) {
      const double dt = T / nsteps;
      State s{target(0.0), base.velocity, 0.0};
      for (int k = 0; k < nsteps; ++k) {
        const double ta = s.time + theta * dt;
        const TransportField f = evaluate_transport(sp, *pb.extension, s.velocity, ta);
        const ContinuitySystem sys =
            assemble_continuity_system(sp, f, *pb.extension, ta, pb.eps);
        const Eigen::VectorXd extra = -(sp.scalar_gram() * target_dot(ta) +
                                        sys.op * target(ta) + sys.load);
        s = continuity_step(pb, s, dt, sc, extra);
      }
      return (s.density - target(T)).norm();
    };
    const double e1 = march_error(32);
    const double e2 = march_error(64);
    const double ratio = e1 / e2;
    CAPTURE(scheme);
    CAPTURE(e1);
    CAPTURE(e2);
    if (theta == 1.0) {
      CHECK(ratio > 1.6);
      CHECK(ratio < 2.5);
    } else {
      CHECK(ratio > 3.1);
      CHECK(ratio < 5.0);
    }
  }
}

TEST_CASE("momentum stepper tracks a high-order ODE reference at frozen density") {
  // With the density frozen at a constant, the momentum solve is a standard
  // stiff ODE for the velocity coefficients; a fine fourth-order reference of
  // the same semi-discrete right side pins the stepper's accuracy and order.
  RunConfig c = testkit::closed_config();
  Problem pb = make_problem(c);
  const GalerkinSpace& sp = *pb.space;

  Eigen::VectorXd a_rho = Eigen::VectorXd::Zero(sp.scalar_dim());
  a_rho[0] = 0.45 * std::sqrt(sp.domain().area());
  const Eigen::VectorXd b0 = testkit::random_state(sp, 9001).velocity;
  const double t_total = 0.25;

  const Eigen::MatrixXd mass =
      assemble_mass_operator(sp, a_rho, pb.eps, pb.negativity_abort);
  Eigen::LDLT<Eigen::MatrixXd> mass_solver(mass);
  const auto ode_rhs = [&](const Eigen::VectorXd& b, double t) -> Eigen::VectorXd {
    return mass_solver.solve(assemble_momentum_rhs(
        sp, *pb.extension, pb.reg_pressure, pb.friction, a_rho, b, t, pb.eps));
  };

  // classical Runge-Kutta reference on a much finer grid
  Eigen::VectorXd b_ref = b0;
  {
    const int nref = 4096;
    const double h = t_total / nref;
    for (int k = 0; k < nref; ++k) {
      const double t = k * h;
      const Eigen::VectorXd k1 = ode_rhs(b_ref, t);
      const Eigen::VectorXd k2 = ode_rhs(b_ref + 0.5 * h * k1, t + 0.5 * h);
      const Eigen::VectorXd k3 = ode_rhs(b_ref + 0.5 * h * k2, t + 0.5 * h);
      const Eigen::VectorXd k4 = ode_rhs(b_ref + h * k3, t + h);
      b_ref += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  REQUIRE(b_ref.allFinite());

  for (const char* scheme : {"backward_euler", "crank_nicolson"}) {
    c.scheme = scheme;
    StepperConfig sc = c.stepper();
    sc.picard_max = 8;       // solve each implicit step tightly so the
    sc.picard_tol = 1e-14;   // measured error is pure time truncation
    auto march_error = [&](int nsteps) {
      const double dt = t_total / nsteps;
      Eigen::VectorXd b = b0;
      for (int k = 0; k < nsteps; ++k) {
        const State s1{a_rho, b, (k + 1) * dt};
        b = momentum_step(pb, s1, a_rho, dt, sc).velocity;
      }
      return (b - b_ref).norm();
    };
    const double e1 = march_error(128);
    const double e2 = march_error(256);
    const double ratio = e1 / e2;
    CAPTURE(scheme);
    CAPTURE(e1);
    CAPTURE(e2);
    CHECK(e2 < 1e-3);  // absolute sanity: the orbits genuinely agree
    if (std::string(scheme) == "backward_euler") {
      CHECK(ratio > 1.6);
      CHECK(ratio < 2.5);
    } else {
      CHECK(ratio > 3.1);
      CHECK(ratio < 5.0);
    }
  }
}

TEST_CASE("advective restriction subdivides base steps without missing the period end") {
  RunConfig c = testkit::small_config();
  c.steps_per_period = 20;
  Problem pb = make_problem(c);
  State start = testkit::random_state(*pb.space, 12);
  start.time = 0.0;

  StepperConfig loose = c.stepper();
  loose.cfl_safety = 0.0;  // disabled: exactly the base step count
  const Trajectory t0 = march_period(pb, start, loose);
  CHECK(t0.steps.size() == 20);

  StepperConfig tight = c.stepper();
  tight.cfl_safety = 0.002;  // far below any sensible value: forces splitting
  const Trajectory t1 = march_period(pb, start, tight);
  CHECK(t1.steps.size() > t0.steps.size());
  CHECK(t1.final().time == doctest::Approx(pb.period()).epsilon(1e-13));
  // subdivided steps still close the mass identity and stay ordered
  double worst = 0.0;
  for (const StepInfo& st : t1.steps) worst = std::max(worst, std::abs(st.ledger.mass_defect));
  CHECK(worst < 1e-10);
  for (std::size_t k = 1; k < t1.states.size(); ++k)
    CHECK(t1.states[k].time > t1.states[k - 1].time);
  // every base-step boundary appears among the accepted times
  for (int i = 0; i <= 20; ++i) {
    const double tb = pb.period() * i / 20.0;
    bool found = false;
    for (const State& s : t1.states)
      if (std::abs(s.time - tb) < 1e-12) found = true;
    CAPTURE(i);
    CHECK(found);
  }
}
