#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pcns {

/// Periodic channel: x in [0, L) with period L, y in [0, H] with solid walls
/// at y = 0 and y = H.  Outward normals are (0,-1) at the bottom wall and
/// (0,+1) at the top wall.
struct ChannelDomain {
  double length = 2.0 * 3.14159265358979323846;
  double height = 1.0;
  /// Quadrature orders.  Zero means "derive from the mode count" when the
  /// Galerkin space is built.
  int quad_x = 0;
  int quad_y = 0;

  double area() const { return length * height; }
  void validate() const;  // throws std::invalid_argument
};

/// Tensor quadrature over the channel interior.  Trapezoid rule in x (exact
/// for trigonometric polynomials below the node count) and Gauss-Legendre in
/// y, with the y axis split into panels at supplied breakpoints so that
/// integrands that are only piecewise smooth in y (the wall-collar cutoff)
/// are analytic within each panel.
struct QuadratureGrid {
  Eigen::VectorXd x;   // node x-coordinates, flattened grid, size n
  Eigen::VectorXd y;   // node y-coordinates, size n
  Eigen::VectorXd w;   // combined weights, size n
  int nx = 0;          // nodes along x
  int ny = 0;          // nodes along y (sum over panels)

  // Separable axis data; the flattened grid is the product with x-major
  // ordering, node q = i*ny + j, and w[q] = wx * wy[j].
  Eigen::VectorXd x_axis;  // size nx
  Eigen::VectorXd y_axis;  // size ny
  Eigen::VectorXd wy;      // per-y-node panel-Gauss weights, size ny
  double wx = 0.0;         // uniform trapezoid weight, length/nx

  int size() const { return static_cast<int>(w.size()); }
};

/// Quadrature along the two walls.  Same trapezoid nodes in x on each wall.
/// Node order: bottom wall first, then top wall.
struct WallQuadrature {
  Eigen::VectorXd x;        // size 2*nx
  Eigen::VectorXd y;        // 0 for bottom nodes, H for top nodes
  Eigen::VectorXd w;        // arc-length weights, L/nx each
  Eigen::Matrix2Xd normal;  // outward unit normal per node
  int nx = 0;

  int size() const { return static_cast<int>(w.size()); }
};

/// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Interior quadrature with y panels split at `y_breaks` (interior ordinates,
/// strictly inside (0, H); duplicates and out-of-range entries are ignored).
/// `nodes_x` uniform trapezoid points; `nodes_y_hint` is the Gauss order a
/// full-height panel would receive -- each panel gets that count scaled by
/// its width fraction plus a fixed pad, so the resolution per unit length
/// (and hence the resolvable trigonometric frequency) is uniform across
/// panels.
QuadratureGrid build_interior_quadrature(const ChannelDomain& dom, int nodes_x,
                                         int nodes_y_hint,
                                         const std::vector<double>& y_breaks);

WallQuadrature build_wall_quadrature(const ChannelDomain& dom, int nodes_x);

}  // namespace pcns
