#include "pcns/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pcns {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Quintic smoothstep and derivatives on [0, 1].
double smooth5(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }
double smooth5_d1(double s) { return 30.0 * s * s * (1.0 - s) * (1.0 - s); }
double smooth5_d2(double s) { return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s); }
double smooth5_d3(double s) { return 60.0 * (1.0 - 6.0 * s + 6.0 * s * s); }

// Adaptive Gauss-Kronrod 7-15 on [a, b].
struct GkResult {
  double value;
  double error;
};

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
  static const double xg[15] = {
      -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
      -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
      0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
      0.864864423359769,  0.949107912342759,  0.991455371120813};
  static const double wk[15] = {
      0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
      0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
      0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
      0.104790010322250, 0.063092092629979, 0.022935322010529};
  static const double wg[7] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                               0.417959183673469, 0.381830050505119, 0.279705391489277,
                               0.129484966168870};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double vk = 0.0, vg = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double fv = f(c + h * xg[i]);
    vk += wk[i] * fv;
    if (i % 2 == 1) vg += wg[i / 2] * fv;
  }
  return {vk * h, std::abs((vk - vg) * h)};
}

double adaptive_gk(const std::function<double(double)>& f, double a, double b, double tol,
                   int depth) {
  GkResult r = gk15(f, a, b);
  // Accept on the requested tolerance or on the floating-point floor of the
  // error estimate; the latter keeps deep subdivisions from chasing a
  // tolerance the arithmetic cannot express.
  if (r.error <= tol || r.error <= 1e-16 * (1.0 + std::abs(r.value))) return r.value;
  if (depth >= 48) {
    std::ostringstream msg;
    msg << "adaptive quadrature stalled on [" << a << ", " << b
        << "], achieved tolerance " << r.error << " vs requested " << tol;
    throw NumericError(msg.str());
  }
  const double c = 0.5 * (a + b);
  return adaptive_gk(f, a, c, 0.5 * tol, depth + 1) +
         adaptive_gk(f, c, b, 0.5 * tol, depth + 1);
}

}  // namespace

void PressureModel::validate() const {
  if (!(rho_max > 0)) throw std::invalid_argument("rho_max must be positive");
  if (!(beta >= 3.0)) throw std::invalid_argument("pressure exponent must be >= 3");
  if (!(amplitude > 0)) throw std::invalid_argument("pressure amplitude must be positive");
}

double PressureModel::value(double rho) const {
  if (rho < 0 || rho >= rho_max)
    throw std::domain_error("density outside [0, rho_max) in pressure evaluation");
  return amplitude * rho / std::pow(rho_max - rho, beta);
}

double PressureModel::deriv(double rho) const {
  if (rho < 0 || rho >= rho_max)
    throw std::domain_error("density outside [0, rho_max) in pressure evaluation");
  const double d = rho_max - rho;
  return amplitude * (1.0 / std::pow(d, beta) + beta * rho / std::pow(d, beta + 1.0));
}

void RegularizedPressure::validate() const {
  base.validate();
  if (!(delta > 0) || !(delta < 0.5 * base.rho_max))
    throw std::invalid_argument("delta must lie in (0, rho_max/2)");
  if (!(gamma_exp > 2.0)) throw std::invalid_argument("gamma_exp must exceed 2");
}

double RegularizedPressure::value(double rho) const {
  if (rho < 0) throw std::domain_error("negative density in pressure evaluation");
  const double rj = junction();
  if (rho <= rj) return base.value(rho) + delta * rho * rho;
  const double s = rho - rj;
  return std::pow(s, gamma_exp) + base.value(rj) + base.deriv(rj) * s + delta * rho * rho;
}

double RegularizedPressure::deriv(double rho) const {
  if (rho < 0) throw std::domain_error("negative density in pressure evaluation");
  const double rj = junction();
  if (rho <= rj) return base.deriv(rho) + 2.0 * delta * rho;
  const double s = rho - rj;
  return gamma_exp * std::pow(s, gamma_exp - 1.0) + base.deriv(rj) + 2.0 * delta * rho;
}

PressurePotential PressurePotential::for_law(std::function<double(double)> p,
                                             std::function<double(double)> dp,
                                             double domain_max, double reference) {
  if (!(reference > 0) || !(reference < domain_max))
    throw std::invalid_argument("potential reference density out of range");
  PressurePotential pot;
  pot.p_ = std::move(p);
  pot.dp_ = std::move(dp);
  pot.ref_ = reference;
  pot.domain_max_ = domain_max;
  pot.slope0_ = pot.dp_(0.0);

  // Graded grid: geometric from near-vacuum through the reference, then
  // uniform-in-log toward the domain end (finite laws approach the packing
  // singularity, regularized laws extend to a generous cap).
  const double lo = reference * 1e-6;
  double hi;
  bool singular_top = std::isfinite(domain_max);
  if (singular_top) {
    hi = domain_max * (1.0 - 1e-10);
  } else {
    hi = 64.0 * reference > 4.0 ? 64.0 * reference : 4.0;
  }
  // Coarse outline: geometric sections from near-vacuum through the
  // reference toward the top (for singular laws the last section grades the
  // gap to the packing density geometrically).
  std::vector<double> coarse;
  coarse.push_back(lo);
  const auto append_geometric = [&coarse](double from, double to, int steps) {
    const double r = std::pow(to / from, 1.0 / steps);
    double v = from;
    for (int i = 0; i < steps; ++i) {
      v = (i + 1 == steps) ? to : v * r;
      coarse.push_back(v);
    }
  };
  append_geometric(lo, reference, 48);
  if (singular_top) {
    const double knee = domain_max * 0.5;
    append_geometric(reference, knee, 160);
    const int steps = 160;
    const double gap0 = domain_max - knee, gap1 = domain_max - hi;
    const double r = std::pow(gap1 / gap0, 1.0 / steps);
    double gap = gap0;
    for (int i = 0; i < steps; ++i) {
      gap *= r;
      coarse.push_back(domain_max - gap);
    }
  } else {
    append_geometric(reference, hi, 240);
  }

  // Fill the final grid left to right, splitting every cell until the cubic
  // Hermite midpoint prediction matches the integrated value.  The budget is
  // expressed per unit length so it bounds the *slope* error of the
  // interpolant, which is what the thermodynamic identity
  // P'(rho) rho - P(rho) = p(rho) differentiates; the identity then holds to
  // ~4x the budget relative to p even under finite differencing.  Splitting
  // also lands nodes tightly around interior derivative kinks (e.g. the
  // junction of a regularized law) without knowing where they are.
  const auto integrand = [&pot](double z) { return pot.p_(z) / (z * z); };
  const double slope_budget = 2.5e-6;
  std::vector<double>& g = pot.grid_;
  std::vector<double>& iv = pot.ival_;
  g.clear();
  iv.clear();
  g.push_back(coarse.front());
  iv.push_back(0.0);  // provisional anchor; shifted to the reference below
  const std::function<void(double, double, double, double, int)> refine =
      [&](double z0, double i0, double z1, double i1, int depth) {
        const double dz = z1 - z0;
        const double zm = 0.5 * (z0 + z1);
        const double quad_tol = 1e-13 * (1.0 + std::abs(i0));
        const double im = i0 + adaptive_gk(integrand, z0, zm, quad_tol, 0);
        // Hermite prediction at the midpoint from endpoint values and the
        // exact endpoint slopes p/z^2.
        const double pred =
            0.5 * (i0 + i1) + 0.125 * dz * (integrand(z0) - integrand(z1));
        const double scale = std::max(std::abs(pot.p_(zm)) / zm, std::abs(pot.slope0_));
        // Below the reference the tabulation only carries P continuously to
        // zero; nothing differentiates it there, so the outline cells stand.
        const bool ok = zm < 0.5 * pot.ref_ ||
                        std::abs(pred - im) <= slope_budget * dz * std::max(scale, 1e-12);
        if (ok || depth >= 14 || dz <= 1e-9 * std::max(z1, 1e-300) ||
            g.size() > 60000) {
          g.push_back(z1);
          iv.push_back(i1);
          return;
        }
        refine(z0, i0, zm, im, depth + 1);
        refine(zm, im, z1, i1, depth + 1);
      };
  for (std::size_t c = 0; c + 1 < coarse.size(); ++c) {
    const double z0 = coarse[c], z1 = coarse[c + 1];
    const double i0 = iv.back();
    const double quad_tol = 1e-13 * (1.0 + std::abs(i0));
    const double i1 = i0 + adaptive_gk(integrand, z0, z1, quad_tol, 0);
    refine(z0, i0, z1, i1, 0);
  }

  // Anchor I = 0 at the reference node (a coarse node, so exactly present).
  const int n = static_cast<int>(g.size());
  int iref = 0;
  for (int i = 0; i < n; ++i)
    if (std::abs(g[i] - reference) < std::abs(g[iref] - reference)) iref = i;
  const double shift = iv[iref];
  for (int i = 0; i < n; ++i) iv[i] -= shift;
  iv[iref] = 0.0;
  pot.islope_.resize(n);
  for (int i = 0; i < n; ++i) pot.islope_[i] = integrand(g[i]);
  return pot;
}

PressurePotential PressurePotential::for_pressure(const PressureModel& m, double reference) {
  m.validate();
  return for_law([m](double r) { return m.value(r); }, [m](double r) { return m.deriv(r); },
                 m.rho_max, reference);
}

PressurePotential PressurePotential::for_pressure(const RegularizedPressure& m,
                                                  double reference) {
  m.validate();
  return for_law([m](double r) { return m.value(r); }, [m](double r) { return m.deriv(r); },
                 std::numeric_limits<double>::infinity(), reference);
}

double PressurePotential::interp_I(double rho) const {
  const std::vector<double>& g = grid_;
  if (rho <= g.front()) {
    // Log asymptote: p(z)/z^2 ~ p'(0)/z near vacuum.
    return ival_.front() + slope0_ * std::log(rho / g.front());
  }
  if (rho >= g.back()) {
    if (std::isfinite(domain_max_) && rho >= domain_max_)
      throw std::domain_error("density at or above the packing density in potential");
    // Rare tail past the table: direct adaptive quadrature from the last node.
    const auto integrand = [this](double z) { return p_(z) / (z * z); };
    return ival_.back() + adaptive_gk(integrand, g.back(), rho, 1e-12, 0);
  }
  const auto it = std::upper_bound(g.begin(), g.end(), rho);
  const int i = static_cast<int>(it - g.begin()) - 1;
  const double h = g[i + 1] - g[i];
  const double s = (rho - g[i]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * ival_[i] + h10 * h * islope_[i] + h01 * ival_[i + 1] + h11 * h * islope_[i + 1];
}

double PressurePotential::value(double rho) const {
  if (rho < 0) throw std::domain_error("negative density in potential evaluation");
  if (rho == 0.0) return 0.0;
  return rho * interp_I(rho);
}

double PressurePotential::deriv(double rho) const {
  if (rho < 0) throw std::domain_error("negative density in potential evaluation");
  if (rho == 0.0) return -std::numeric_limits<double>::infinity();
  return interp_I(rho) + p_(rho) / rho;
}

double PressurePotential::second_deriv(double rho) const {
  if (rho <= 0) throw std::domain_error("nonpositive density in potential curvature");
  return dp_(rho) / rho;
}

double PressurePotential::convexity_gap(double a, double b) const {
  if (!(a > 0)) throw std::domain_error("nonpositive expansion point in convexity gap");
  if (a == b) return 0.0;
  const auto f = [this, b](double z) { return (b - z) * dp_(z) / z; };
  return gk15(f, a, b).value;
}

void FrictionPenalty::validate() const {
  if (lambda_bar < 0) throw std::invalid_argument("friction coefficient must be >= 0");
  if (!(rho_max > 0)) throw std::invalid_argument("rho_max must be positive");
}

double FrictionPenalty::value(double rho) const {
  const double excess = rho - 1.5 * rho_max;
  return excess > 0 ? lambda_bar * excess : 0.0;
}

void ViscosityModel::validate() const {
  if (!(mu > 0)) throw std::invalid_argument("shear viscosity must be positive");
  if (eta < 0) throw std::invalid_argument("bulk viscosity must be >= 0");
}

Mat2 ViscosityModel::stress(const Mat2& g) const {
  const double div = g.trace();
  Mat2 s = mu * (g + g.transpose() - div * Mat2::Identity());
  s += eta * div * Mat2::Identity();
  return s;
}

double ViscosityModel::contract(const Mat2& g, const Mat2& h) const {
  const double dg = g.trace(), dh = h.trace();
  return mu * ((g.array() * h.array()).sum() + (g.transpose().array() * h.array()).sum() -
               dg * dh) +
         eta * dg * dh;
}

TravelingWaveData::TravelingWaveData(const Params& p) : p_(p) {
  if (p.wavenumber_index < 1) throw std::invalid_argument("wavenumber index must be >= 1");
  if (!(p.period > 0)) throw std::invalid_argument("period must be positive");
  if (!(p.height > 0) || !(p.length > 0))
    throw std::invalid_argument("data geometry must be positive");
  k_ = 2.0 * kPi * p.wavenumber_index / p.length;
  freq_ = p.autonomous ? 0.0 : 2.0 * kPi / p.period;
}

ScalarJet TravelingWaveData::stream(double t, double x, double y) const {
  // w = -(A/k) cos(k x + phase) q(y), q = (1 + cos(pi y/H))/2.
  ScalarJet j;
  const double A = p_.amplitude;
  if (A == 0.0) return j;
  const double ph = k_ * x + freq_ * t + p_.phase0;
  const double c = std::cos(ph), s = std::sin(ph);
  const double ay = kPi / p_.height;
  const double q = 0.5 * (1.0 + std::cos(ay * y));
  const double q1 = -0.5 * ay * std::sin(ay * y);
  const double q2 = -0.5 * ay * ay * std::cos(ay * y);
  const double q3 = 0.5 * ay * ay * ay * std::sin(ay * y);
  const double B = -A / k_;
  j.v = B * c * q;
  j.x = -B * k_ * s * q;
  j.y = B * c * q1;
  j.xx = -B * k_ * k_ * c * q;
  j.xy = -B * k_ * s * q1;
  j.yy = B * c * q2;
  j.xxx = B * k_ * k_ * k_ * s * q;
  j.xxy = -B * k_ * k_ * c * q1;
  j.xyy = -B * k_ * s * q2;
  j.yyy = B * c * q3;
  j.t = -B * freq_ * s * q;
  j.tx = -B * freq_ * k_ * c * q;
  j.ty = -B * freq_ * s * q1;
  return j;
}

VectorJet TravelingWaveData::drift(double /*t*/, double /*x*/, double y) const {
  VectorJet j;
  j.v = Vec2(0.0, p_.slope * y);
  j.grad(1, 1) = p_.slope;
  return j;
}

double TravelingWaveData::inflow_density(double t, double x) const {
  const double ph = k_ * x + freq_ * t + p_.phase0;
  return p_.rho_mean + p_.rho_amp * std::sin(ph);
}

Vec2 TravelingWaveData::body_force(double, double, double) const { return p_.gravity; }

CutoffFunction::CutoffFunction(double omega, double height)
    : omega_(omega), height_(height) {
  if (!(height > 0)) throw std::invalid_argument("cutoff: height must be positive");
  if (!(omega > 0) || !(omega < 0.5 * height))
    throw std::invalid_argument("cutoff width must lie in (0, height/2)");
}

namespace {
// dist(y) and d(dist)/dy in the channel.
inline void wall_distance(double y, double height, double& dist, double& sgn) {
  if (y <= 0.5 * height) {
    dist = y;
    sgn = 1.0;
  } else {
    dist = height - y;
    sgn = -1.0;
  }
}
}  // namespace

double CutoffFunction::value(double y) const {
  double dist, sgn;
  wall_distance(y, height_, dist, sgn);
  if (dist <= 0.25 * omega_) return 1.0;
  if (dist >= omega_) return 0.0;
  const double s = (dist / omega_ - 0.25) / 0.75;
  return 1.0 - smooth5(s);
}

double CutoffFunction::deriv(double y) const {
  double dist, sgn;
  wall_distance(y, height_, dist, sgn);
  if (dist <= 0.25 * omega_ || dist >= omega_) return 0.0;
  const double s = (dist / omega_ - 0.25) / 0.75;
  return -smooth5_d1(s) / (0.75 * omega_) * sgn;
}

double CutoffFunction::second_deriv(double y) const {
  double dist, sgn;
  wall_distance(y, height_, dist, sgn);
  if (dist <= 0.25 * omega_ || dist >= omega_) return 0.0;
  const double s = (dist / omega_ - 0.25) / 0.75;
  const double c = 0.75 * omega_;
  return -smooth5_d2(s) / (c * c);  // sgn^2 = 1
}

double CutoffFunction::third_deriv(double y) const {
  double dist, sgn;
  wall_distance(y, height_, dist, sgn);
  if (dist <= 0.25 * omega_ || dist >= omega_) return 0.0;
  const double s = (dist / omega_ - 0.25) / 0.75;
  const double c = 0.75 * omega_;
  return -smooth5_d3(s) / (c * c * c) * sgn;
}

std::vector<double> CutoffFunction::junction_ordinates() const {
  return {0.25 * omega_, omega_, height_ - omega_, height_ - 0.25 * omega_};
}

VelocityExtension::VelocityExtension(CutoffFunction cutoff,
                                     std::shared_ptr<const BoundaryData> data,
                                     ViscosityModel viscosity)
    : cutoff_(std::move(cutoff)), data_(std::move(data)), visc_(viscosity) {
  if (!data_) throw std::invalid_argument("extension needs boundary data");
  visc_.validate();
}

ExtensionEval VelocityExtension::eval(double t, double x, double y) const {
  const ScalarJet w = data_->stream(t, x, y);
  const VectorJet vb = data_->drift(t, x, y);
  const double d = cutoff_.value(y);
  const double d1 = cutoff_.deriv(y);
  const double d2 = cutoff_.second_deriv(y);
  const double d3 = cutoff_.third_deriv(y);

  // Derivatives of W = d(y) * w(t,x,y).
  const double Wx = d * w.x;
  const double Wy = d1 * w.v + d * w.y;
  const double Wxx = d * w.xx;
  const double Wxy = d1 * w.x + d * w.xy;
  const double Wyy = d2 * w.v + 2.0 * d1 * w.y + d * w.yy;
  const double Wxxx = d * w.xxx;
  const double Wxxy = d1 * w.xx + d * w.xxy;
  const double Wxyy = d2 * w.x + 2.0 * d1 * w.xy + d * w.xyy;
  const double Wyyy = d3 * w.v + 3.0 * d2 * w.y + 3.0 * d1 * w.yy + d * w.yyy;
  const double Wtx = d * w.tx;
  const double Wty = d1 * w.t + d * w.ty;

  ExtensionEval e;
  e.u = Vec2(-Wy, Wx) + vb.v;
  e.grad(0, 0) = -Wxy + vb.grad(0, 0);
  e.grad(0, 1) = -Wyy + vb.grad(0, 1);
  e.grad(1, 0) = Wxx + vb.grad(1, 0);
  e.grad(1, 1) = Wxy + vb.grad(1, 1);
  e.dt = Vec2(-Wty, Wtx) + vb.dt;
  e.div = vb.grad(0, 0) + vb.grad(1, 1);  // the stream part cancels exactly
  // div S(grad u) = mu lap(u) + eta grad(div u) in 2D with the zero-trace
  // shear convention.
  const Vec2 lap_u(-(Wxxy + Wyyy) + vb.lap[0], Wxxx + Wxyy + vb.lap[1]);
  e.div_stress = visc_.mu * lap_u + visc_.eta * vb.grad_div;
  return e;
}

Vec2 VelocityExtension::trace_velocity(double t, double x, double y) const {
  const ScalarJet w = data_->stream(t, x, y);
  const VectorJet vb = data_->drift(t, x, y);
  return Vec2(-w.y, w.x) + vb.v;
}

double VelocityExtension::normal_speed(double t, double x, double y, const Vec2& n) const {
  return trace_velocity(t, x, y).dot(n);
}

void validate_boundary_data(const BoundaryData& data, double length, double height,
                            double rho_max, double margin) {
  if (!(margin > 0)) throw std::invalid_argument("inflow margin must be positive");
  const double T = data.period();
  const int nt = 9, nx = 17, ny = 9;
  double div_max = 0.0;
  bool drift_nonzero = false;
  for (int it = 0; it < nt; ++it) {
    const double t = T * it / nt;
    for (int ix = 0; ix < nx; ++ix) {
      const double x = length * ix / nx;
      const double rb = data.inflow_density(t, x);
      if (rb < 0 || rb > rho_max - margin) {
        std::ostringstream msg;
        msg << "inflow density " << rb
            << " violates the strict packing bound: need 0 <= rho_B <= rho_max - margin = "
            << rho_max - margin;
        throw std::invalid_argument(msg.str());
      }
      for (int iy = 0; iy <= ny; ++iy) {
        const double y = height * iy / ny;
        const VectorJet vb = data.drift(t, x, y);
        const Mat2 sym = 0.5 * (vb.grad + vb.grad.transpose());
        const double tr = sym.trace(), det = sym.determinant();
        if (tr < -1e-12 || det < -1e-12)
          throw std::invalid_argument(
              "drift field symmetric gradient must be positive semidefinite");
        if (vb.v.norm() > 0 || vb.grad.norm() > 0) drift_nonzero = true;
        div_max = std::max(div_max, vb.grad.trace());
        // T-periodicity of every field at machine precision.
        const ScalarJet w0 = data.stream(t, x, y), w1 = data.stream(t + T, x, y);
        if (std::abs(w0.v - w1.v) > 1e-10 * (1.0 + std::abs(w0.v)))
          throw std::invalid_argument("stream potential is not time-periodic");
        const VectorJet b1 = data.drift(t + T, x, y);
        if ((vb.v - b1.v).norm() > 1e-10 * (1.0 + vb.v.norm()))
          throw std::invalid_argument("drift field is not time-periodic");
      }
      const double rb1 = data.inflow_density(t + T, x);
      if (std::abs(rb - rb1) > 1e-10 * (1.0 + std::abs(rb)))
        throw std::invalid_argument("inflow density is not time-periodic");
    }
  }
  // A nonzero drift must supply positive dilation somewhere; identically zero
  // drift (degenerate test data) is accepted.
  if (drift_nonzero && !(div_max > 0))
    throw std::invalid_argument("drift dilation must be positive on some subdomain");
}

}  // namespace pcns
