#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

namespace pcns {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Numerical failure (quadrature non-convergence, singular solve, blow-up).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Hard-sphere pressure family p(rho) = amplitude * rho / (rho_max - rho)^beta.
/// Strictly increasing on [0, rho_max), divergent at the packing density
/// rho_max.  Other laws with the same qualitative shape can be plugged in
/// wherever a {value, deriv, rho_max} triple is accepted (see
/// PressurePotential::for_law).
struct PressureModel {
  double rho_max = 1.0;
  double beta = 3.0;
  double amplitude = 1.0;

  void validate() const;             // throws std::invalid_argument
  double value(double rho) const;    // throws std::domain_error outside [0, rho_max)
  double deriv(double rho) const;
};

/// Bounded continuation of the hard-sphere law past the packing density.
/// Below rho_max - delta it is p(rho) + delta*rho^2; above, the singular part
/// is replaced by its tangent line plus a (rho - rho_max + delta)^gamma_exp
/// growth term, keeping the law C^1 and strictly increasing on [0, inf).
struct RegularizedPressure {
  PressureModel base;
  double delta = 5e-2;
  double gamma_exp = 4.0;

  void validate() const;
  double value(double rho) const;  // throws std::domain_error for rho < 0
  double deriv(double rho) const;
  double junction() const { return base.rho_max - delta; }
};

/// Pressure potential P with P'(rho)*rho - P(rho) = p(rho), realized as
/// P(rho) = rho * I(rho), I(rho) = integral_{ref}^{rho} p(z)/z^2 dz.
///
/// I is tabulated once on a graded grid by adaptive Gauss-Kronrod quadrature
/// and interpolated with cubic Hermite pieces using the exact node slopes
/// I'(rho) = p(rho)/rho^2.  Because value() and deriv() share the same
/// interpolated I, the defining identity holds exactly for the returned
/// values, independent of interpolation error.
///
/// P(ref) = 0; for any rho >= ref the potential is nonnegative.  Below ref it
/// dips to -p(ref/e) at most, so a near-vacuum reference keeps the potential
/// nonnegative for every density the solver can visit.
class PressurePotential {
 public:
  /// Generic entry point: law given by callables on [0, domain_max).
  /// domain_max may be infinity (regularized laws).
  static PressurePotential for_law(std::function<double(double)> p,
                                   std::function<double(double)> dp,
                                   double domain_max, double reference);
  static PressurePotential for_pressure(const PressureModel& m, double reference);
  static PressurePotential for_pressure(const RegularizedPressure& m, double reference);

  double value(double rho) const;        // P
  double deriv(double rho) const;        // P'
  double second_deriv(double rho) const; // P'' = p'(rho)/rho
  /// Second-order Taylor remainder P(b) - P(a) - P'(a)(b - a), computed as
  /// the curvature integral int_a^b (b - z) p'(z)/z dz with the exact law,
  /// so its nonnegativity (convexity of P) is structural rather than subject
  /// to interpolation error.  Requires a > 0.
  double convexity_gap(double a, double b) const;
  double reference() const { return ref_; }

 private:
  PressurePotential() = default;
  double interp_I(double rho) const;

  std::function<double(double)> p_, dp_;
  double ref_ = 0.0;
  double domain_max_ = 0.0;
  double slope0_ = 0.0;  // p'(0), controls the log asymptote near vacuum
  std::vector<double> grid_, ival_, islope_;
};

/// Penalty activating once the density exceeds 1.5 * rho_max:
/// value = lambda_bar * max(rho - 1.5*rho_max, 0).
struct FrictionPenalty {
  double lambda_bar = 0.0;
  double rho_max = 1.0;

  void validate() const;
  double value(double rho) const;
};

/// Newtonian stress with zero-trace shear part (2D):
/// S(G) = mu*(G + G^T - div*I) + eta*div*I, div = tr(G).
struct ViscosityModel {
  double mu = 0.1;
  double eta = 0.1;

  void validate() const;
  Mat2 stress(const Mat2& grad_u) const;
  /// Frobenius pairing S(G):H.
  double contract(const Mat2& grad_u, const Mat2& grad_w) const;
};

/// Value of a time-dependent scalar field with space derivatives through
/// third order plus first time derivatives of the value and gradient.
struct ScalarJet {
  double v = 0, x = 0, y = 0;
  double xx = 0, xy = 0, yy = 0;
  double xxx = 0, xxy = 0, xyy = 0, yyy = 0;
  double t = 0, tx = 0, ty = 0;
};

/// Value of a time-dependent vector field with the derivatives needed by the
/// velocity extension: gradient, time derivative, Laplacian, grad(div).
struct VectorJet {
  Vec2 v = Vec2::Zero();
  Mat2 grad = Mat2::Zero();   // grad(i,j) = d u_i / d x_j
  Vec2 dt = Vec2::Zero();
  Vec2 lap = Vec2::Zero();
  Vec2 grad_div = Vec2::Zero();
};

/// Time-periodic boundary data for the channel.  The boundary velocity is the
/// trace of perp-grad(stream) + drift, the inflow density is prescribed where
/// that velocity points inward, and body_force is the volume forcing.
/// Implementations must be T-periodic in time and x-periodic in space.
class BoundaryData {
 public:
  virtual ~BoundaryData() = default;
  virtual double period() const = 0;
  virtual ScalarJet stream(double t, double x, double y) const = 0;
  virtual VectorJet drift(double t, double x, double y) const = 0;
  virtual double inflow_density(double t, double x) const = 0;
  virtual Vec2 body_force(double t, double x, double y) const = 0;
};

/// Reference data family:
///   stream  w(t,x,y) = -(A/k) cos(k x + phase(t)) * q(y),
///           q(y) = (1 + cos(pi y / H)) / 2,  phase(t) = 2 pi t / T + phase0
///           (phase frequency zero in autonomous mode),
///   drift   (0, slope * y),
///   inflow density rho_mean + rho_amp * sin(k x + phase(t)),
///   constant body force.
/// The stream trace splits the bottom wall into moving inflow and outflow
/// arcs; the drift gives uniform positive dilation and a steady top outflow.
class TravelingWaveData final : public BoundaryData {
 public:
  struct Params {
    double period = 1.0;
    double height = 1.0;
    double slope = 0.04;        // drift (0, slope*y)
    double amplitude = 0.1;     // A, peak inflow speed of the stream part
    int wavenumber_index = 1;   // k = 2*pi*index/L
    double length = 2.0 * 3.14159265358979323846;
    double rho_mean = 0.45;
    double rho_amp = 0.05;
    double phase0 = 0.0;
    bool autonomous = false;    // freeze the phase: data time-independent
    Vec2 gravity = Vec2::Zero();
  };

  explicit TravelingWaveData(const Params& p);

  double period() const override { return p_.period; }
  ScalarJet stream(double t, double x, double y) const override;
  VectorJet drift(double t, double x, double y) const override;
  double inflow_density(double t, double x) const override;
  Vec2 body_force(double t, double x, double y) const override;

  const Params& params() const { return p_; }

 private:
  Params p_;
  double k_ = 1.0;       // x wavenumber
  double freq_ = 0.0;    // phase angular frequency
};

/// Wall-collar cutoff d(y): identically 1 for dist(y) <= omega/4, identically
/// 0 for dist(y) >= omega, quintic smoothstep ramp in between, where
/// dist(y) = min(y, H - y).  C^2 everywhere, piecewise polynomial in dist.
class CutoffFunction {
 public:
  CutoffFunction(double omega, double height);  // throws std::invalid_argument

  double omega() const { return omega_; }
  double height() const { return height_; }

  double value(double y) const;
  double deriv(double y) const;         // d/dy
  double second_deriv(double y) const;  // d2/dy2
  double third_deriv(double y) const;   // d3/dy3, one-sided at ramp junctions

  /// Ordinates where the profile switches polynomial piece; interior
  /// quadrature panels are split here so integrands stay analytic per panel.
  std::vector<double> junction_ordinates() const;

 private:
  double omega_, height_;
};

/// Pointwise data of the extended boundary velocity field.
struct ExtensionEval {
  Vec2 u = Vec2::Zero();           // u_B
  Mat2 grad = Mat2::Zero();        // grad(i,j) = d u_i / d x_j
  Vec2 dt = Vec2::Zero();          // time derivative
  double div = 0.0;                // equals div(drift); the stream part is exactly solenoidal
  Vec2 div_stress = Vec2::Zero();  // divergence of S(grad u_B)
};

/// Divergence-controlled extension of the boundary velocity into the channel:
/// u_B = perp_grad(cutoff * stream) + drift, perp_grad f = (-df/dy, df/dx).
class VelocityExtension {
 public:
  VelocityExtension(CutoffFunction cutoff, std::shared_ptr<const BoundaryData> data,
                    ViscosityModel viscosity);

  ExtensionEval eval(double t, double x, double y) const;
  /// Boundary formula perp_grad(stream) + drift (cutoff = 1 on the collar).
  Vec2 trace_velocity(double t, double x, double y) const;
  double normal_speed(double t, double x, double y, const Vec2& n) const;

  const CutoffFunction& cutoff() const { return cutoff_; }
  const BoundaryData& data() const { return *data_; }
  const ViscosityModel& viscosity() const { return visc_; }

 private:
  CutoffFunction cutoff_;
  std::shared_ptr<const BoundaryData> data_;
  ViscosityModel visc_;
};

/// Samples the data invariants (drift symmetric gradient PSD, positive
/// dilation floor, inflow density within [0, rho_max - margin], T-periodicity)
/// over a (t, x, y) grid; throws std::invalid_argument on violation.
void validate_boundary_data(const BoundaryData& data, double length, double height,
                            double rho_max, double margin);

}  // namespace pcns
