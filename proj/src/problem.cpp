#include "pcns/problem.hpp"

namespace pcns {

double state_energy(const Problem& pb, const State& s) {
  const GalerkinSpace& sp = *pb.space;
  const Eigen::VectorXd rho = sp.density_at_nodes(s.density);
  Eigen::VectorXd v1, v2;
  sp.velocity_at_nodes(s.velocity, v1, v2);
  double acc = 0.0;
  for (int q = 0; q < sp.grid().size(); ++q) {
    const double rpos = rho[q] > 0 ? rho[q] : 0.0;
    const double vv = v1[q] * v1[q] + v2[q] * v2[q];
    acc += sp.grid().w[q] * (0.5 * (pb.eps + rpos) * vv + pb.potential->value(rpos));
  }
  return acc;
}

double state_norm_sq(const Problem& pb, const State& s) {
  const Eigen::MatrixXd m =
      assemble_mass_operator(*pb.space, s.density, pb.eps, pb.negativity_abort);
  const double kin = 0.5 * s.velocity.dot(m * s.velocity);
  const double l2 = s.density.dot(pb.space->scalar_gram() * s.density);
  return kin + l2;
}

double state_distance_sq(const Problem& pb, const State& base, const State& other) {
  const Eigen::MatrixXd m =
      assemble_mass_operator(*pb.space, base.density, pb.eps, pb.negativity_abort);
  const Eigen::VectorXd dv = other.velocity - base.velocity;
  const Eigen::VectorXd dr = other.density - base.density;
  return 0.5 * dv.dot(m * dv) + dr.dot(pb.space->scalar_gram() * dr);
}

}  // namespace pcns
