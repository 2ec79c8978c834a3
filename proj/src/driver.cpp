#include "pcns/driver.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

namespace pcns {

using nlohmann::json;

namespace {

std::shared_ptr<const GalerkinSpace> build_space_for(const RunConfig& cfg) {
  ChannelDomain dom;
  dom.length = cfg.length;
  dom.height = cfg.height;
  dom.quad_x = cfg.quad_x;
  dom.quad_y = cfg.quad_y;
  const CutoffFunction cut(cfg.resolved_omega(), cfg.height);
  const ViscosityModel visc{cfg.mu, cfg.eta};
  return GalerkinSpace::build(dom, cfg.modes, visc, cut.junction_ordinates());
}

double sup_extension_gradient(const VelocityExtension& ext, const GalerkinSpace& sp,
                              double period) {
  double sup = 0.0;
  const QuadratureGrid& g = sp.grid();
  for (int it = 0; it < 9; ++it) {
    const double t = period * it / 9.0;
    for (int q = 0; q < g.size(); ++q)
      sup = std::max(sup, ext.eval(t, g.x[q], g.y[q]).grad.norm());
  }
  return sup;
}

}  // namespace

Problem make_problem(const RunConfig& cfg) {
  try {
    cfg.validate();

    TravelingWaveData::Params dp;
    dp.period = cfg.period;
    dp.height = cfg.height;
    dp.slope = cfg.drift_slope;
    dp.amplitude = cfg.stream_amplitude;
    dp.wavenumber_index = cfg.wavenumber_index;
    dp.length = cfg.length;
    dp.rho_mean = cfg.inflow_rho_mean;
    dp.rho_amp = cfg.inflow_rho_amp;
    dp.phase0 = cfg.phase0;
    dp.autonomous = cfg.autonomous;
    dp.gravity = Vec2(cfg.gravity_x, cfg.gravity_y);
    auto data = std::make_shared<TravelingWaveData>(dp);
    validate_boundary_data(*data, cfg.length, cfg.height, cfg.rho_max, cfg.inflow_margin);

    const ViscosityModel visc{cfg.mu, cfg.eta};
    const CutoffFunction cut(cfg.resolved_omega(), cfg.height);
    auto ext = std::make_shared<VelocityExtension>(cut, data, visc);
    auto space = build_space_for(cfg);

    Problem pb;
    pb.space = space;
    pb.data = data;
    pb.extension = ext;
    pb.pressure = PressureModel{cfg.rho_max, cfg.beta, cfg.pressure_amplitude};
    pb.pressure.validate();
    pb.reg_pressure = RegularizedPressure{pb.pressure, cfg.delta, cfg.gamma_exp};
    pb.reg_pressure.validate();
    pb.potential = std::make_shared<PressurePotential>(PressurePotential::for_pressure(
        pb.reg_pressure, cfg.rho_max * cfg.potential_reference_factor));
    pb.viscosity = visc;
    pb.eps = cfg.eps;
    pb.delta = cfg.delta;
    pb.negativity_abort = cfg.negativity_abort * cfg.rho_max;

    double lam = cfg.lambda_bar;
    if (lam < 0) {
      const double ckp = korn_poincare_constant(*space, cfg.mu, cfg.eta);
      lam = 10.0 * ckp * sup_extension_gradient(*ext, *space, cfg.period) * cfg.rho_max;
    }
    pb.friction = FrictionPenalty{lam, cfg.rho_max};
    pb.friction.validate();
    return pb;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::filesystem::filesystem_error("cannot create output directory", dir, ec);
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out)
    throw std::filesystem::filesystem_error(
        "cannot open file for writing", file,
        std::make_error_code(std::errc::permission_denied));
  return out;
}

json report_to_json(const RunResult& r) {
  json j;
  j["resolved_config"] = json::parse(config_to_json(r.resolved));
  json fp;
  fp["converged"] = r.report.converged;
  fp["aborted"] = r.report.aborted;
  fp["abort_reason"] = r.report.abort_reason;
  fp["iterations"] = r.report.iterations;
  fp["final_residual"] = r.report.final_residual;
  fp["residual_history"] = r.report.residual_history;
  fp["energy_history"] = r.report.energy_history;
  j["fixed_point"] = fp;
  json c;
  c["ok"] = r.compliance.ok();
  c["ledger_band_ok"] = r.compliance.ledger_band_ok;
  c["ledger_signs_ok"] = r.compliance.ledger_signs_ok;
  c["mass_ok"] = r.compliance.mass_ok;
  c["collar_convection_ok"] = r.compliance.collar_convection_ok;
  c["collar_damping_ok"] = r.compliance.collar_damping_ok;
  c["max_ledger_residual"] = r.compliance.max_ledger_residual;
  c["max_mass_defect"] = r.compliance.max_mass_defect;
  c["convection_ratio"] = r.compliance.convection_ratio;
  c["damping_ratio"] = r.compliance.damping_ratio;
  j["compliance"] = c;
  json b;
  b["rho_min"] = r.bounds.rho_min;
  b["rho_max"] = r.bounds.rho_max;
  b["overshoot"] = r.bounds.overshoot;
  b["kinetic_sup"] = r.bounds.kinetic_sup;
  b["pressure_integral"] = r.bounds.pressure_integral;
  b["dissipation_integral"] = r.bounds.dissipation_integral;
  b["all_finite"] = r.bounds.all_finite;
  j["bounds"] = b;
  j["korn_constant"] = r.korn_constant;
  // Wall-clock time is scrubbed in deterministic mode so reports compare
  // bitwise across repeated runs.
  j["runtime_seconds"] = r.resolved.deterministic ? 0.0 : r.runtime_seconds;
  j["exit_code"] = r.exit_code;
  return j;
}

RunResult run_single_impl(Problem pb, const RunConfig& cfg,
                          const std::filesystem::path& out_dir, bool quiet,
                          std::optional<State> warm) {
  const auto t_start = std::chrono::steady_clock::now();
  RunResult result;
  result.resolved = cfg;
  result.resolved.omega = cfg.resolved_omega();
  result.korn_constant = korn_poincare_constant(*pb.space, cfg.mu, cfg.eta);

  const StepperConfig step_cfg = cfg.stepper();
  FixedPointConfig fp_cfg = cfg.fixed_point();
  ComplianceThresholds thr;
  thr.ledger_band_coeff = cfg.ledger_band_coeff;

  const bool auto_friction = cfg.lambda_bar < 0;
  for (int attempt = 0;; ++attempt) {
    fp_cfg.initial_guess = warm ? InitialGuess::Supplied : InitialGuess::Zero;
    result.report = solve_periodic(pb, step_cfg, fp_cfg, warm);
    if (!quiet) {
      if (result.report.converged)
        std::cout << "fixed point converged in " << result.report.iterations
                  << " iterations (residual " << result.report.final_residual << ")\n";
      else
        std::cout << "fixed point did not converge after " << result.report.iterations
                  << " iterations (residual " << result.report.final_residual
                  << (result.report.aborted ? ", aborted: " + result.report.abort_reason : "")
                  << ")\n";
    }
    if (!result.report.converged) {
      result.exit_code = kNotConverged;
      break;
    }
    result.compliance = check_compliance(pb, result.report.orbit, thr);
    if (!result.compliance.collar_damping_ok && auto_friction && attempt < 3) {
      pb.friction.lambda_bar *= 2.0;
      warm = result.report.solution;
      if (!quiet)
        std::cout << "damping reserve exceeded (ratio " << result.compliance.damping_ratio
                  << "); doubling friction coefficient to " << pb.friction.lambda_bar
                  << "\n";
      continue;
    }
    result.exit_code = result.compliance.ok() ? kOk : kInvariantViolation;
    break;
  }
  result.resolved.lambda_bar = pb.friction.lambda_bar;

  const bool have_orbit = result.report.orbit.states.size() >= 2;
  if (have_orbit) result.bounds = monitor_bounds(pb, result.report.orbit);
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  ensure_dir(out_dir);
  write_report_json(result, out_dir / "report.json");
  {
    auto out = open_out(out_dir / "resolved_config.json");
    out << config_to_json(result.resolved);
  }
  if (have_orbit) {
    write_ledger_csv(result.report.orbit, out_dir / "ledger.csv");
    write_trajectory_json(result.report.orbit, out_dir / "trajectory.json");
    write_snapshots_json(pb, result.resolved, result.report.orbit,
                         out_dir / "state_snapshots.json");
  }
  if (!quiet)
    std::cout << "run finished with exit code " << result.exit_code << "; artifacts in "
              << out_dir.string() << "\n";
  return result;
}

}  // namespace

RunResult run_single(const RunConfig& cfg, const std::filesystem::path& out_dir, bool quiet,
                     const std::optional<State>& warm) {
  return run_single_impl(make_problem(cfg), cfg, out_dir, quiet, warm);
}

SweepResult run_sweep(const SweepPlan& plan, const std::filesystem::path& out_dir,
                      bool quiet) {
  plan.validate();
  ensure_dir(out_dir);
  SweepResult res;
  std::shared_ptr<const GalerkinSpace> prev_space;
  std::optional<State> prev_solution;

  for (int i = 0; i < static_cast<int>(plan.schedule.size()); ++i) {
    const RunConfig cfg = plan.at(i);
    Problem pb = make_problem(cfg);
    std::optional<State> warm;
    if (plan.warm_start && prev_solution && prev_space)
      warm = embed_state(*prev_space, *pb.space, *prev_solution);

    std::ostringstream name;
    name << "run_" << std::setw(3) << std::setfill('0') << i;
    if (!quiet)
      std::cout << "sweep " << plan.axis << " = " << plan.schedule[i] << " -> "
                << name.str() << "\n";
    const RunResult r = run_single_impl(pb, cfg, out_dir / name.str(), quiet, warm);

    SweepRow row;
    row.value = plan.schedule[i];
    row.converged = r.report.converged;
    row.iterations = r.report.iterations;
    row.residual = r.report.final_residual;
    row.energy = r.report.energy_history.empty() ? 0.0 : r.report.energy_history.back();
    row.overshoot = r.bounds.overshoot;
    row.rho_max_seen = r.bounds.rho_max;
    row.convection_ratio = r.compliance.convection_ratio;
    row.damping_ratio = r.compliance.damping_ratio;
    row.mass_defect = r.compliance.max_mass_defect;
    row.exit_code = r.exit_code;
    res.rows.push_back(row);
    res.exit_code = std::max(res.exit_code, r.exit_code);

    if (r.report.converged) {
      prev_space = pb.space;
      prev_solution = r.report.solution;
    }
  }

  {
    auto csv = open_out(out_dir / "sweep_summary.csv");
    csv << std::setprecision(std::numeric_limits<double>::max_digits10);
    csv << "value,converged,iterations,residual,energy,overshoot,rho_max_seen,"
           "convection_ratio,damping_ratio,mass_defect,exit_code\n";
    for (const SweepRow& r : res.rows)
      csv << r.value << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << ','
          << r.residual << ',' << r.energy << ',' << r.overshoot << ',' << r.rho_max_seen
          << ',' << r.convection_ratio << ',' << r.damping_ratio << ',' << r.mass_defect
          << ',' << r.exit_code << '\n';
  }
  {
    json rows = json::array();
    for (const SweepRow& r : res.rows) {
      json j;
      j["value"] = r.value;
      j["converged"] = r.converged;
      j["iterations"] = r.iterations;
      j["residual"] = r.residual;
      j["energy"] = r.energy;
      j["overshoot"] = r.overshoot;
      j["rho_max_seen"] = r.rho_max_seen;
      j["convection_ratio"] = r.convection_ratio;
      j["damping_ratio"] = r.damping_ratio;
      j["mass_defect"] = r.mass_defect;
      j["exit_code"] = r.exit_code;
      rows.push_back(j);
    }
    json summary;
    summary["axis"] = plan.axis;
    summary["rows"] = rows;
    summary["exit_code"] = res.exit_code;
    auto out = open_out(out_dir / "sweep_summary.json");
    out << summary.dump(2) << "\n";
  }
  return res;
}

namespace {

// Rebuilds per-step ledger rows from stored states (theta from the scheme).
Trajectory with_recomputed_steps(const Problem& pb, Trajectory traj, const RunConfig& cfg) {
  const double theta = cfg.scheme == "crank_nicolson" ? 0.5 : 1.0;
  traj.steps.clear();
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    StepInfo info;
    info.ledger = ledger_step(pb, traj.states[k], traj.states[k + 1], theta);
    traj.steps.push_back(std::move(info));
  }
  return traj;
}

}  // namespace

int check_run(const std::filesystem::path& run_dir, bool quiet) {
  const auto cfg_file = run_dir / "resolved_config.json";
  const auto traj_file = run_dir / "trajectory.json";
  if (!std::filesystem::exists(cfg_file) || !std::filesystem::exists(traj_file)) {
    if (!quiet)
      std::cerr << "check: missing resolved_config.json or trajectory.json in "
                << run_dir.string() << "\n";
    return kIoError;
  }
  RunConfig cfg;
  Problem pb;
  try {
    cfg = load_config(cfg_file.string());
    pb = make_problem(cfg);
  } catch (const ConfigError& e) {
    if (!quiet) std::cerr << "check: invalid stored configuration: " << e.what() << "\n";
    return kConfigError;
  }
  Trajectory traj;
  try {
    traj = with_recomputed_steps(pb, read_trajectory_json(traj_file), cfg);
  } catch (const std::exception& e) {
    if (!quiet) std::cerr << "check: cannot read trajectory: " << e.what() << "\n";
    return kIoError;
  }
  if (traj.states.size() < 2) {
    if (!quiet) std::cerr << "check: stored trajectory has fewer than two states\n";
    return kIoError;
  }
  ComplianceThresholds thr;
  thr.ledger_band_coeff = cfg.ledger_band_coeff;
  const ComplianceReport rep = check_compliance(pb, traj, thr);
  const double periodicity = verify_periodicity(pb, traj);
  if (!quiet) {
    std::cout << "ledger band ok:      " << (rep.ledger_band_ok ? "yes" : "NO")
              << "  (max residual " << rep.max_ledger_residual << ")\n"
              << "ledger signs ok:     " << (rep.ledger_signs_ok ? "yes" : "NO") << "\n"
              << "mass identity ok:    " << (rep.mass_ok ? "yes" : "NO")
              << "  (max defect " << rep.max_mass_defect << ")\n"
              << "collar convection:   " << rep.convection_ratio
              << (rep.collar_convection_ok ? "  (ok)" : "  (VIOLATED)") << "\n"
              << "collar damping:      " << rep.damping_ratio
              << (rep.collar_damping_ok ? "  (ok)" : "  (VIOLATED)") << "\n"
              << "periodicity defect:  " << periodicity << "\n";
  }
  return rep.ok() ? kOk : kInvariantViolation;
}

void export_timeseries(const std::filesystem::path& run_dir,
                       const std::filesystem::path& out_dir) {
  const RunConfig cfg = load_config((run_dir / "resolved_config.json").string());
  const Problem pb = make_problem(cfg);
  const Trajectory traj =
      with_recomputed_steps(pb, read_trajectory_json(run_dir / "trajectory.json"), cfg);
  ensure_dir(out_dir);
  write_ledger_csv(traj, out_dir / "ledger.csv");
  write_snapshots_json(pb, cfg, traj, out_dir / "state_snapshots.json");
}

void write_ledger_csv(const Trajectory& traj, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  const auto& names = ledger_schema();
  for (std::size_t i = 0; i < names.size(); ++i)
    out << names[i] << (i + 1 < names.size() ? ',' : '\n');
  for (const StepInfo& st : traj.steps) {
    const auto vals = ledger_values(st.ledger);
    for (std::size_t i = 0; i < vals.size(); ++i)
      out << vals[i] << (i + 1 < vals.size() ? ',' : '\n');
  }
}

void write_trajectory_json(const Trajectory& traj, const std::filesystem::path& file) {
  json states = json::array();
  for (const State& s : traj.states) {
    json st;
    st["time"] = s.time;
    st["density"] = std::vector<double>(s.density.begin(), s.density.end());
    st["velocity"] = std::vector<double>(s.velocity.begin(), s.velocity.end());
    states.push_back(std::move(st));
  }
  json j;
  j["states"] = std::move(states);
  auto out = open_out(file);
  out << j.dump() << "\n";
}

Trajectory read_trajectory_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + file.string());
  json j = json::parse(in);  // throws json::parse_error (std::exception)
  Trajectory traj;
  for (const json& st : j.at("states")) {
    State s;
    s.time = st.at("time").get<double>();
    const auto d = st.at("density").get<std::vector<double>>();
    const auto v = st.at("velocity").get<std::vector<double>>();
    s.density = Eigen::Map<const Eigen::VectorXd>(d.data(), d.size());
    s.velocity = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    traj.states.push_back(std::move(s));
  }
  return traj;
}

void write_snapshots_json(const Problem& pb, const RunConfig& cfg, const Trajectory& traj,
                          const std::filesystem::path& file) {
  const GalerkinSpace& sp = *pb.space;
  const double t0 = traj.initial().time;
  const double period = pb.period();

  json snaps = json::array();
  for (double frac : cfg.snapshot_times) {
    const double target = t0 + frac * period;
    std::size_t best = 0;
    for (std::size_t k = 1; k < traj.states.size(); ++k)
      if (std::abs(traj.states[k].time - target) <
          std::abs(traj.states[best].time - target))
        best = k;
    const State& s = traj.states[best];

    std::vector<double> xs(cfg.sample_nx), ys(cfg.sample_ny);
    for (int i = 0; i < cfg.sample_nx; ++i) xs[i] = cfg.length * i / cfg.sample_nx;
    for (int jy = 0; jy < cfg.sample_ny; ++jy)
      ys[jy] = cfg.height * jy / (cfg.sample_ny - 1);

    std::vector<double> rho, u1, u2;
    rho.reserve(xs.size() * ys.size());
    u1.reserve(rho.capacity());
    u2.reserve(rho.capacity());
    for (double x : xs)
      for (double y : ys) {
        rho.push_back(sp.density_at(s.density, x, y));
        const Vec2 v = sp.velocity_at(s.velocity, x, y);
        const Vec2 u = v + pb.extension->eval(s.time, x, y).u;
        u1.push_back(u[0]);
        u2.push_back(u[1]);
      }
    json snap;
    snap["fraction"] = frac;
    snap["time"] = s.time;
    snap["x"] = xs;
    snap["y"] = ys;
    snap["ordering"] = "index = ix * ny + iy";
    snap["rho"] = rho;
    snap["u1"] = u1;
    snap["u2"] = u2;
    snaps.push_back(std::move(snap));
  }
  json j;
  j["snapshots"] = std::move(snaps);
  auto out = open_out(file);
  out << j.dump() << "\n";
}

void write_report_json(const RunResult& result, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << report_to_json(result).dump(2) << "\n";
}

}  // namespace pcns
