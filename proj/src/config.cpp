#include "pcns/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace pcns {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void RunConfig::validate() const {
  require(length > 0, "length must be positive");
  require(height > 0, "height must be positive");
  require(quad_x >= 0 && quad_y >= 0, "quadrature orders must be nonnegative (0 = auto)");
  require(modes >= 1, "modes must be at least 1");
  require(mu > 0, "mu must be positive");
  require(eta >= 0, "eta must be nonnegative");
  require(rho_max > 0, "rho_max must be positive");
  require(beta >= 3.0, "beta must be at least 3");
  require(pressure_amplitude > 0, "pressure_amplitude must be positive");
  require(eps > 0, "eps must be positive");
  require(delta > 0 && delta < rho_max, "delta must lie in (0, rho_max)");
  require(gamma_exp > 2.0, "gamma_exp must exceed 2");
  require(potential_reference_factor > 0 && potential_reference_factor < 1,
          "potential_reference_factor must lie in (0, 1)");
  require(negativity_abort > 0, "negativity_abort must be positive");
  require(period > 0, "period must be positive");
  require(drift_slope >= 0, "drift_slope must be nonnegative");
  require(stream_amplitude >= 0, "stream_amplitude must be nonnegative");
  require(wavenumber_index >= 1, "wavenumber_index must be at least 1");
  require(inflow_margin > 0, "inflow_margin must be positive");
  require(inflow_rho_amp >= 0, "inflow_rho_amp must be nonnegative");
  require(inflow_rho_mean - inflow_rho_amp >= 0,
          "inflow density must stay nonnegative: need inflow_rho_mean - inflow_rho_amp >= 0");
  require(inflow_rho_mean + inflow_rho_amp <= rho_max - inflow_margin,
          "inflow density must respect the packing margin: need "
          "inflow_rho_mean + inflow_rho_amp <= rho_max - inflow_margin");
  const double om = resolved_omega();
  require(om > 0 && 2.0 * om < height, "omega must satisfy 0 < omega < height/2");
  require(steps_per_period >= 1, "steps_per_period must be at least 1");
  require(scheme == "backward_euler" || scheme == "crank_nicolson",
          "scheme must be 'backward_euler' or 'crank_nicolson'");
  require(picard_max >= 1, "picard_max must be at least 1");
  require(picard_tol > 0, "picard_tol must be positive");
  require(max_retries >= 0, "max_retries must be nonnegative");
  require(max_iterations >= 1, "max_iterations must be at least 1");
  require(tolerance > 0, "tolerance must be positive");
  require(damping > 0 && damping <= 1.0, "damping must lie in (0, 1]");
  require(anderson_depth >= 0, "anderson_depth must be nonnegative");
  require(ledger_band_coeff >= 0, "ledger_band_coeff must be nonnegative");
  require(weak_residual_count >= 1, "weak_residual_count must be at least 1");
  require(sample_nx >= 2 && sample_ny >= 2, "sample grid must be at least 2x2");
  for (double t : snapshot_times)
    require(t >= 0 && t <= 1.0 + 1e-12,
            "snapshot_times are fractions of the period and must lie in [0, 1]");
}

StepperConfig RunConfig::stepper() const {
  StepperConfig c;
  c.steps_per_period = steps_per_period;
  c.scheme = scheme == "crank_nicolson" ? Scheme::CrankNicolsonImex : Scheme::BackwardEulerImex;
  c.picard_max = picard_max;
  c.picard_tol = picard_tol;
  c.cfl_safety = cfl_safety;
  c.max_retries = max_retries;
  return c;
}

FixedPointConfig RunConfig::fixed_point() const {
  FixedPointConfig c;
  c.max_iterations = max_iterations;
  c.tolerance = tolerance;
  c.damping = damping;
  c.anderson_depth = anderson_depth;
  c.initial_guess = InitialGuess::Zero;
  return c;
}

namespace {

// Single description of every serialized field, used by both directions so
// the key set cannot drift.
template <class Cfg, class Fn>
void for_each_field(Cfg& c, Fn&& f) {
  f("length", c.length);
  f("height", c.height);
  f("quad_x", c.quad_x);
  f("quad_y", c.quad_y);
  f("modes", c.modes);
  f("mu", c.mu);
  f("eta", c.eta);
  f("rho_max", c.rho_max);
  f("beta", c.beta);
  f("pressure_amplitude", c.pressure_amplitude);
  f("gravity_x", c.gravity_x);
  f("gravity_y", c.gravity_y);
  f("eps", c.eps);
  f("delta", c.delta);
  f("gamma_exp", c.gamma_exp);
  f("lambda_bar", c.lambda_bar);
  f("potential_reference_factor", c.potential_reference_factor);
  f("negativity_abort", c.negativity_abort);
  f("period", c.period);
  f("drift_slope", c.drift_slope);
  f("stream_amplitude", c.stream_amplitude);
  f("wavenumber_index", c.wavenumber_index);
  f("inflow_rho_mean", c.inflow_rho_mean);
  f("inflow_rho_amp", c.inflow_rho_amp);
  f("inflow_margin", c.inflow_margin);
  f("phase0", c.phase0);
  f("autonomous", c.autonomous);
  f("omega", c.omega);
  f("steps_per_period", c.steps_per_period);
  f("scheme", c.scheme);
  f("picard_max", c.picard_max);
  f("picard_tol", c.picard_tol);
  f("cfl_safety", c.cfl_safety);
  f("max_retries", c.max_retries);
  f("max_iterations", c.max_iterations);
  f("tolerance", c.tolerance);
  f("damping", c.damping);
  f("anderson_depth", c.anderson_depth);
  f("ledger_band_coeff", c.ledger_band_coeff);
  f("weak_residual_count", c.weak_residual_count);
  f("snapshot_times", c.snapshot_times);
  f("sample_nx", c.sample_nx);
  f("sample_ny", c.sample_ny);
  f("seed", c.seed);
  f("deterministic", c.deterministic);
}

}  // namespace

std::string config_to_json(const RunConfig& c) {
  json j = json::object();
  for_each_field(c, [&j](const char* key, const auto& value) { j[key] = value; });
  return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  RunConfig c;
  std::set<std::string> known;
  try {
    for_each_field(c, [&](const char* key, auto& value) {
      known.insert(key);
      if (j.contains(key)) j.at(key).get_to(value);
    });
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  for (const auto& item : j.items())
    if (!known.count(item.key()))
      throw ConfigError("unknown config key: " + item.key());
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void SweepPlan::validate() const {
  base.validate();
  static const std::set<std::string> axes = {"modes", "eps", "delta", "omega", "lambda", "dt"};
  if (!axes.count(axis))
    throw ConfigError("sweep axis must be one of: modes, eps, delta, omega, lambda, dt");
  if (schedule.empty()) throw ConfigError("sweep schedule must not be empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (axis == "modes" || axis == "dt") {
      const double v = schedule[i];
      if (v < 1 || v != std::floor(v))
        throw ConfigError("sweep schedule for '" + axis + "' must contain positive integers");
    } else if (!(schedule[i] > 0) && axis != "lambda") {
      throw ConfigError("sweep schedule values must be positive");
    }
  }
  for (int i = 0; i < static_cast<int>(schedule.size()); ++i) at(i).validate();
}

RunConfig SweepPlan::at(int i) const {
  if (i < 0 || i >= static_cast<int>(schedule.size()))
    throw ConfigError("sweep index out of range");
  RunConfig c = base;
  const double v = schedule[i];
  if (axis == "modes")
    c.modes = static_cast<int>(v);
  else if (axis == "eps")
    c.eps = v;
  else if (axis == "delta")
    c.delta = v;
  else if (axis == "omega")
    c.omega = v;
  else if (axis == "lambda")
    c.lambda_bar = v;
  else if (axis == "dt")
    c.steps_per_period = static_cast<int>(v);
  else
    throw ConfigError("sweep axis must be one of: modes, eps, delta, omega, lambda, dt");
  return c;
}

}  // namespace pcns
