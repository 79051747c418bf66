#include "sifem/fem.hpp"

#include <cmath>

#include "sifem/errors.hpp"
#include "sifem/mesh.hpp"

namespace sifem {

BasisEval eval_basis(BasisFamily family, double xi, double eta) {
  BasisEval ev;
  // Corner order: (-1,-1), (1,-1), (1,1), (-1,1).
  const double xm = 1.0 - xi, xp = 1.0 + xi;
  const double ym = 1.0 - eta, yp = 1.0 + eta;
  ev.value[0] = 0.25 * xm * ym;
  ev.value[1] = 0.25 * xp * ym;
  ev.value[2] = 0.25 * xp * yp;
  ev.value[3] = 0.25 * xm * yp;
  ev.grad[0] = Vec2(-0.25 * ym, -0.25 * xm);
  ev.grad[1] = Vec2(0.25 * ym, -0.25 * xp);
  ev.grad[2] = Vec2(0.25 * yp, 0.25 * xp);
  ev.grad[3] = Vec2(-0.25 * yp, 0.25 * xm);
  ev.hessian[0] << 0.0, 0.25, 0.25, 0.0;
  ev.hessian[1] << 0.0, -0.25, -0.25, 0.0;
  ev.hessian[2] << 0.0, 0.25, 0.25, 0.0;
  ev.hessian[3] << 0.0, -0.25, -0.25, 0.0;
  ev.count = 4;
  if (family == BasisFamily::Q1Bubble) {
    const double bx = 1.0 - xi * xi, by = 1.0 - eta * eta;
    ev.value[4] = bx * by;
    ev.grad[4] = Vec2(-2.0 * xi * by, -2.0 * eta * bx);
    ev.hessian[4] << -2.0 * by, 4.0 * xi * eta, 4.0 * xi * eta, -2.0 * bx;
    ev.count = 5;
  }
  return ev;
}

QuadRule1D gauss_1d(int n) {
  QuadRule1D rule;
  switch (n) {
    case 1:
      rule.points = {0.0};
      rule.weights = {2.0};
      break;
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      rule.points = {-a, a};
      rule.weights = {1.0, 1.0};
      break;
    }
    case 3: {
      const double a = std::sqrt(3.0 / 5.0);
      rule.points = {-a, 0.0, a};
      rule.weights = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    }
    case 4: {
      const double a = 0.33998104358485626;
      const double b = 0.86113631159405258;
      const double wa = 0.65214515486254614;
      const double wb = 0.34785484513745386;
      rule.points = {-b, -a, a, b};
      rule.weights = {wb, wa, wa, wb};
      break;
    }
    case 5: {
      const double a = 0.53846931010568309;
      const double b = 0.90617984593866399;
      const double wa = 0.47862867049936647;
      const double wb = 0.23692688505618909;
      const double w0 = 0.56888888888888889;
      rule.points = {-b, -a, 0.0, a, b};
      rule.weights = {wb, wa, w0, wa, wb};
      break;
    }
    default:
      throw ConfigError("unsupported Gauss rule order");
  }
  return rule;
}

QuadRule2D gauss_2d(int n) {
  const QuadRule1D r = gauss_1d(n);
  QuadRule2D rule;
  for (std::size_t j = 0; j < r.points.size(); ++j) {
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      rule.points.emplace_back(r.points[i], r.points[j]);
      rule.weights.push_back(r.weights[i] * r.weights[j]);
    }
  }
  return rule;
}

DofMap::DofMap(const SplitMesh& mesh, EnforcementMode mode) : mode_(mode) {
  n_nodes_ = static_cast<int>(mesh.nodes().size());
  n_elements_ = static_cast<int>(mesh.quads().size());
  n_path_nodes_ = mesh.path_node_count();
  n_pressure_ = n_nodes_;
  n_displacement_ = 2 * n_nodes_ + 2 * n_elements_;
  n_interface_ = (mode == EnforcementMode::Strong) ? 6 * n_path_nodes_ : 0;
}

int DofMap::lambda_flux_dof(int path_node, int side) const {
  return (side > 0 ? 0 : n_path_nodes_) + path_node;
}

int DofMap::lambda_traction_dof(int path_node, int side, int comp) const {
  const int base = 2 * n_path_nodes_;
  return base + (side > 0 ? 0 : 2 * n_path_nodes_) + 2 * path_node + comp;
}

}  // namespace sifem
