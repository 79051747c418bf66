#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sifem/geometry.hpp"

namespace sifem {

class SplitMesh;

enum class BasisFamily { Q1, Q1Bubble };

/// Values and reference derivatives of the scalar shape functions of one
/// family at a single reference point (xi, eta) in [-1,1]^2.
///
/// Q1 uses the counterclockwise corner order (-1,-1), (1,-1), (1,1), (-1,1);
/// Q1Bubble appends the interior bubble (1-xi^2)(1-eta^2) as function 4.
struct BasisEval {
  int count = 0;                              // 4 or 5
  std::array<double, 5> value{};              // N
  std::array<Vec2, 5> grad{};                 // (dN/dxi, dN/deta)
  std::array<Eigen::Matrix2d, 5> hessian{};   // d2N/(dxi_a dxi_b)
};

BasisEval eval_basis(BasisFamily family, double xi, double eta);

/// Tensor-product Gauss rule on [-1,1]^2.
struct QuadRule2D {
  std::vector<Vec2> points;
  std::vector<double> weights;
};

/// Gauss rule on [-1,1].
struct QuadRule1D {
  std::vector<double> points;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule per direction (n in {1,2,3} supported).
QuadRule2D gauss_2d(int n);
QuadRule1D gauss_1d(int n);

enum class EnforcementMode { Weak, Strong };

/// Global degree-of-freedom layout on a split mesh.
///
/// Ordering: pressures (one per node), then nodal displacements
/// (node-major, component-minor), then element bubbles (element-major,
/// component-minor), then interface unknowns grouped by kind:
/// all q+ (path-node major), all q-, all t+ (node-major, component-minor),
/// all t-.
class DofMap {
public:
  DofMap(const SplitMesh& mesh, EnforcementMode mode);

  EnforcementMode mode() const { return mode_; }

  int n_pressure() const { return n_pressure_; }
  int n_displacement() const { return n_displacement_; }
  int n_bulk() const { return n_pressure_ + n_displacement_; }
  int n_interface() const { return n_interface_; }
  int n_total() const { return n_bulk() + n_interface_; }

  int pressure_dof(int node) const { return node; }
  int displacement_dof(int node, int comp) const {
    return n_pressure_ + 2 * node + comp;
  }
  int bubble_dof(int element, int comp) const {
    return n_pressure_ + 2 * n_nodes_ + 2 * element + comp;
  }

  /// Indices within the displacement block (global index minus n_pressure).
  int displacement_local(int node, int comp) const { return 2 * node + comp; }
  int bubble_local(int element, int comp) const {
    return 2 * n_nodes_ + 2 * element + comp;
  }

  /// Interface unknown index within the lambda block (offset by n_bulk()
  /// for the position in the full unknown vector). `path_node` indexes the
  /// global list of surrogate path nodes across all cracks.
  int lambda_flux_dof(int path_node, int side) const;            // side: +1/-1
  int lambda_traction_dof(int path_node, int side, int comp) const;

  int n_path_nodes() const { return n_path_nodes_; }

private:
  EnforcementMode mode_;
  int n_nodes_ = 0;
  int n_elements_ = 0;
  int n_path_nodes_ = 0;
  int n_pressure_ = 0;
  int n_displacement_ = 0;
  int n_interface_ = 0;
};

}  // namespace sifem
