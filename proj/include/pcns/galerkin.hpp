#pragma once

#include "pcns/geometry.hpp"
#include "pcns/models.hpp"

#include <memory>
#include <vector>

namespace pcns {

enum class XKind { Constant, Cosine, Sine };

/// Tensor mode label: x factor (constant / cos(2 pi k x / L) / sin) times a
/// y profile (cosine family for the density space, sine family for velocity
/// component profiles).
struct ModeLabel {
  XKind x_kind = XKind::Constant;
  int x_wave = 0;  // k
  int y_mode = 0;  // m: cos(m pi y / H) or sin(m pi y / H)
};

/// Coefficient state of one snapshot: density in the scalar space, velocity
/// deviation (relative to the extended boundary field) in the vector space.
struct State {
  Eigen::VectorXd density;
  Eigen::VectorXd velocity;  // [component-0 profiles; component-1 profiles]
  double time = 0.0;
};

struct ContinuitySystem;
struct TransportField;

/// Spectral Galerkin spaces on the channel.
///
/// Scalar space (densities): {1, cos, sin} x {cos(m pi y/H)}, m = 0..n,
/// including the constant; L^2-orthonormal, smooth up to the boundary.
/// Vector space (velocities): both Cartesian components over
/// {1, cos, sin} x {sin(m pi y/H)}, m = 1..n; every member vanishes on the
/// walls, so the deviation velocity has exact zero trace.
///
/// The build tabulates every basis function (values and gradients) on the
/// interior and wall quadrature grids and precomputes the constant matrices:
/// Gram matrices, scalar stiffness, the viscous dissipation matrix split
/// into its shear (mu) and dilation (eta) parts, and the vector H^1 Gram.
class GalerkinSpace {
 public:
  static std::shared_ptr<const GalerkinSpace> build(const ChannelDomain& dom,
                                                    int n_modes,
                                                    const ViscosityModel& visc,
                                                    const std::vector<double>& y_breaks);

  int n_modes() const { return n_; }
  int scalar_dim() const { return static_cast<int>(scalar_modes_.size()); }
  int profile_dim() const { return static_cast<int>(profile_modes_.size()); }
  int vector_dim() const { return 2 * profile_dim(); }

  const ChannelDomain& domain() const { return dom_; }
  const QuadratureGrid& grid() const { return grid_; }
  const WallQuadrature& wall() const { return wall_; }
  const ViscosityModel& viscosity() const { return visc_; }

  const std::vector<ModeLabel>& scalar_modes() const { return scalar_modes_; }
  const std::vector<ModeLabel>& profile_modes() const { return profile_modes_; }

  // Interior tabulations, one row per quadrature node.
  const Eigen::MatrixXd& scalar_values() const { return Z_; }
  const Eigen::MatrixXd& scalar_dx() const { return Zx_; }
  const Eigen::MatrixXd& scalar_dy() const { return Zy_; }
  const Eigen::MatrixXd& profile_values() const { return S_; }
  const Eigen::MatrixXd& profile_dx() const { return Sx_; }
  const Eigen::MatrixXd& profile_dy() const { return Sy_; }

  // Wall tabulations.
  const Eigen::MatrixXd& scalar_wall_values() const { return Zb_; }
  const Eigen::MatrixXd& profile_wall_values() const { return Sb_; }

  // Constant matrices.
  const Eigen::MatrixXd& scalar_gram() const { return scalar_gram_; }
  const Eigen::MatrixXd& scalar_stiffness() const { return scalar_stiffness_; }
  const Eigen::MatrixXd& vector_gram() const { return vector_gram_; }
  const Eigen::MatrixXd& vector_h1_gram() const { return vector_h1_gram_; }
  /// Dissipation matrix for the configured viscosity: mu*shear + eta*dilation.
  const Eigen::MatrixXd& dissipation() const { return dissipation_; }
  const Eigen::MatrixXd& dissipation_shear() const { return dissipation_shear_; }
  const Eigen::MatrixXd& dissipation_dilation() const { return dissipation_dilation_; }

  // Field reconstruction at the interior quadrature nodes.
  Eigen::VectorXd density_at_nodes(const Eigen::VectorXd& coeffs) const;
  void density_gradient_at_nodes(const Eigen::VectorXd& coeffs, Eigen::VectorXd& gx,
                                 Eigen::VectorXd& gy) const;
  void velocity_at_nodes(const Eigen::VectorXd& coeffs, Eigen::VectorXd& v1,
                         Eigen::VectorXd& v2) const;
  void velocity_gradient_at_nodes(const Eigen::VectorXd& coeffs, Eigen::VectorXd& g11,
                                  Eigen::VectorXd& g12, Eigen::VectorXd& g21,
                                  Eigen::VectorXd& g22) const;
  Eigen::VectorXd density_at_walls(const Eigen::VectorXd& coeffs) const;

  /// Point evaluation (slow path, for exports and probes).
  double density_at(const Eigen::VectorXd& coeffs, double x, double y) const;
  Vec2 velocity_at(const Eigen::VectorXd& coeffs, double x, double y) const;

  State zero_state() const;

 private:
  GalerkinSpace() = default;

  friend Eigen::MatrixXd assemble_mass_operator(const GalerkinSpace&, const Eigen::VectorXd&,
                                                double, double);
  friend ContinuitySystem assemble_continuity_system(const GalerkinSpace&,
                                                     const TransportField&,
                                                     const VelocityExtension&, double, double);
  friend Eigen::VectorXd assemble_momentum_rhs(const GalerkinSpace&, const VelocityExtension&,
                                               const RegularizedPressure&,
                                               const FrictionPenalty&, const Eigen::VectorXd&,
                                               const Eigen::VectorXd&, double, double);

  // Separable fast paths.  The basis functions and quadrature grid are both
  // tensor products (x factor times y profile, trapezoid-x times panel-Gauss
  // y), so evaluation, projection, and field-weighted bilinear forms reduce
  // to small per-axis matrix products instead of dense node-by-mode ones.
  // `X` selects the x table (values or d/dx), `Y` the y family table; the
  // coefficient (respectively result) layout is y-mode fastest, matching the
  // mode enumeration, and node fields are ordered q = i*ny + j.
  void tensor_eval(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const double* coeffs,
                   Eigen::VectorXd& out) const;
  Eigen::VectorXd tensor_project(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                 const Eigen::ArrayXd& field) const;
  Eigen::MatrixXd tensor_bilinear(const Eigen::MatrixXd& XA, const Eigen::MatrixXd& YA,
                                  const Eigen::MatrixXd& XB, const Eigen::MatrixXd& YB,
                                  const Eigen::ArrayXd& field) const;

  ChannelDomain dom_;
  int n_ = 0;
  ViscosityModel visc_;
  QuadratureGrid grid_;
  WallQuadrature wall_;
  std::vector<ModeLabel> scalar_modes_, profile_modes_;
  Eigen::MatrixXd Z_, Zx_, Zy_, S_, Sx_, Sy_, Zb_, Sb_;
  Eigen::MatrixXd scalar_gram_, scalar_stiffness_, vector_gram_, vector_h1_gram_;
  Eigen::MatrixXd dissipation_, dissipation_shear_, dissipation_dilation_;
  // Per-axis basis tables (values and derivatives) on the grid axes.
  Eigen::MatrixXd Xf_, Xf_dx_;    // nx x (2n+1): shared {1, cos, sin} family
  Eigen::MatrixXd Yc_, Yc_dy_;    // ny x (n+1): cosine family (scalar space)
  Eigen::MatrixXd Ys_, Ys_dy_;    // ny x n: sine family (velocity profiles)
};

/// Linear system pieces of the semi-discrete density equation
///   Gram * da/dt + op * a + load = 0.
/// op collects transport (assembled in integrated-by-parts form, so testing
/// with the constant basis function reduces it to the wall flux of rho u_B
/// exactly), the eps reaction and diffusion terms, and the inflow boundary
/// form; load carries the prescribed inflow density flux.
struct ContinuitySystem {
  Eigen::MatrixXd op;
  Eigen::VectorXd load;
};

/// u at the interior nodes = deviation velocity + extension, evaluated once
/// per step and shared between assemblies.
struct TransportField {
  Eigen::VectorXd u1, u2;   // interior nodes
  Eigen::VectorXd div_u;    // interior divergence
  Eigen::VectorXd wall_un;  // u_B . n at wall nodes
};

TransportField evaluate_transport(const GalerkinSpace& space, const VelocityExtension& ext,
                                  const Eigen::VectorXd& velocity_coeffs, double t);

ContinuitySystem assemble_continuity_system(const GalerkinSpace& space,
                                            const TransportField& field,
                                            const VelocityExtension& ext, double t,
                                            double eps);

/// (eps + max(rho,0))-weighted vector mass matrix.  Throws NumericError when
/// the reconstructed density is below -negativity_abort (severe
/// under-resolution); mild negative values are clamped.
Eigen::MatrixXd assemble_mass_operator(const GalerkinSpace& space,
                                       const Eigen::VectorXd& density_coeffs, double eps,
                                       double negativity_abort);

/// Full semi-discrete momentum right side d/dt(mass*b) = rhs, evaluated at
/// the supplied density/velocity coefficients and time: convection of the
/// deviation, bounded-pressure dilation, viscous dissipation of the
/// deviation, the extension's inertial and viscous forcing, the eps coupling
/// terms, body force, and the high-density friction penalty.
Eigen::VectorXd assemble_momentum_rhs(const GalerkinSpace& space,
                                      const VelocityExtension& ext,
                                      const RegularizedPressure& press,
                                      const FrictionPenalty& friction,
                                      const Eigen::VectorXd& density_coeffs,
                                      const Eigen::VectorXd& velocity_coeffs, double t,
                                      double eps);

/// Wall nodes classified by the sign of u_B . n at time t.
struct BoundaryPartition {
  std::vector<int> inflow;   // u_B . n < 0
  std::vector<int> outflow;  // u_B . n >= 0
};

BoundaryPartition boundary_partition(const GalerkinSpace& space, const VelocityExtension& ext,
                                     double t);

/// Transfers a state between spaces of different mode count by matching mode
/// labels; missing modes are dropped, new modes start at zero.
State embed_state(const GalerkinSpace& from, const GalerkinSpace& to, const State& s);

}  // namespace pcns
