#include "pcns/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcns {

void ChannelDomain::validate() const {
  if (!(length > 0) || !(height > 0))
    throw std::invalid_argument("channel dimensions must be positive");
  if (quad_x < 0 || quad_y < 0)
    throw std::invalid_argument("quadrature orders must be nonnegative");
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Newton iteration from the Chebyshev initial guess; symmetric pairs.
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
}

QuadratureGrid build_interior_quadrature(const ChannelDomain& dom, int nodes_x,
                                         int nodes_y_hint,
                                         const std::vector<double>& y_breaks) {
  dom.validate();
  if (nodes_x < 2 || nodes_y_hint < 2)
    throw std::invalid_argument("quadrature needs at least two nodes per direction");

  // Panel edges: 0, interior breakpoints, H.
  std::vector<double> edges{0.0};
  for (double b : y_breaks)
    if (b > 1e-14 && b < dom.height - 1e-14) edges.push_back(b);
  edges.push_back(dom.height);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-13; }),
              edges.end());

  // Per-panel Gauss order.  A Gauss rule with q nodes resolves trigonometric
  // content of phase ~2q across its panel, so the node count must scale with
  // the panel width: a fixed split of a total budget starves the wide
  // mid-channel panel and produces O(1) errors in products of the highest
  // modes.  nodes_y_hint is the count a full-height panel receives; narrow
  // panels keep a floor that still over-resolves the cutoff polynomial.
  const int n_panels = static_cast<int>(edges.size()) - 1;
  std::vector<int> per_panel(n_panels);
  for (int p = 0; p < n_panels; ++p) {
    const double frac = (edges[p + 1] - edges[p]) / dom.height;
    per_panel[p] = std::max(8, static_cast<int>(std::ceil(nodes_y_hint * frac)) + 6);
  }

  std::vector<double> ys, wys;
  for (int p = 0; p < n_panels; ++p) {
    std::vector<double> gn, gw;
    gauss_legendre(per_panel[p], gn, gw);
    const double a = edges[p], b = edges[p + 1];
    for (size_t i = 0; i < gn.size(); ++i) {
      ys.push_back(0.5 * (a + b) + 0.5 * (b - a) * gn[i]);
      wys.push_back(0.5 * (b - a) * gw[i]);
    }
  }

  QuadratureGrid g;
  g.nx = nodes_x;
  g.ny = static_cast<int>(ys.size());
  const int n = g.nx * g.ny;
  g.x.resize(n);
  g.y.resize(n);
  g.w.resize(n);
  g.x_axis.resize(g.nx);
  g.y_axis = Eigen::Map<const Eigen::VectorXd>(ys.data(), g.ny);
  g.wy = Eigen::Map<const Eigen::VectorXd>(wys.data(), g.ny);
  g.wx = dom.length / nodes_x;  // periodic trapezoid
  int idx = 0;
  for (int i = 0; i < nodes_x; ++i) {
    const double x = dom.length * i / nodes_x;
    g.x_axis[i] = x;
    for (int j = 0; j < g.ny; ++j, ++idx) {
      g.x[idx] = x;
      g.y[idx] = ys[j];
      g.w[idx] = g.wx * wys[j];
    }
  }
  return g;
}

WallQuadrature build_wall_quadrature(const ChannelDomain& dom, int nodes_x) {
  dom.validate();
  if (nodes_x < 2) throw std::invalid_argument("wall quadrature needs at least two nodes");
  WallQuadrature w;
  w.nx = nodes_x;
  const int n = 2 * nodes_x;
  w.x.resize(n);
  w.y.resize(n);
  w.w.resize(n);
  w.normal.resize(2, n);
  const double wx = dom.length / nodes_x;
  for (int i = 0; i < nodes_x; ++i) {
    const double x = dom.length * i / nodes_x;
    w.x[i] = x;
    w.y[i] = 0.0;
    w.w[i] = wx;
    w.normal.col(i) = Eigen::Vector2d(0.0, -1.0);
    w.x[nodes_x + i] = x;
    w.y[nodes_x + i] = dom.height;
    w.w[nodes_x + i] = wx;
    w.normal.col(nodes_x + i) = Eigen::Vector2d(0.0, 1.0);
  }
  return w;
}

}  // namespace pcns
