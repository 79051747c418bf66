#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "sifem/fem.hpp"
#include "sifem/mesh.hpp"
#include "sifem/physics.hpp"

namespace sifem {

using SpMat = Eigen::SparseMatrix<double>;

/// Assembled sparse operators. Bulk blocks are indexed field-locally:
/// pressure blocks are n_p x n_p, displacement blocks n_u x n_u, coupling
/// C is n_p x n_u, interface coupling blocks pair bulk rows with the
/// lambda unknowns.
struct SystemBlocks {
  int n_p = 0, n_u = 0, n_lambda = 0;

  SpMat M_p;   // pressure storage mass
  SpMat C;    // Biot coupling (pressure rows, displacement columns)
  SpMat K_p;   // pressure diffusion
  SpMat K_u;   // drained elasticity

  SpMat Kc_p;  // interface Robin penalty (weak enforcement)
  SpMat Kc_u;  // interface spring stiffness (weak enforcement)
  SpMat Dc_u;  // interface spring viscosity (weak enforcement)

  SpMat Rc_p;   // normal-mismatch transfer, flow
  SpMat Rc_uu;  // normal-mismatch transfer, mechanics (displacement part)
  SpMat Rc_up;  // normal-mismatch transfer, mechanics (pressure part)

  bool with_hessian = false;
  SpMat Sc_p;   // gradient-correction transfer, flow
  SpMat Sc_uu;  // gradient-correction transfer, mechanics (displacement part)
  SpMat Sc_up;  // gradient-correction transfer, mechanics (pressure part)

  SpMat G_p;  // interface-unknown coupling into pressure rows
  SpMat G_u;  // interface-unknown coupling into displacement rows

  Eigen::VectorXd f_p;
  Eigen::VectorXd f_u;
};

/// Homogeneous essential constraints, as global unknown indices in the
/// stacked (pressure, displacement) ordering.
struct ConstraintSet {
  std::vector<int> dofs;            // sorted, unique
  std::vector<double> values;       // prescribed values (all zero here)
};

void assemble_bulk(const SplitMesh& mesh, const DofMap& dofs,
                   const MaterialParams& mat, SystemBlocks& blocks);

/// Assembles every surrogate-facet block: the constitutive penalty blocks
/// (Kc/Dc), the normal-mismatch blocks (Rc) and, when `with_hessian` is
/// set, the gradient-correction blocks (Sc).
void assemble_interface_weak(const SplitMesh& mesh,
                             const std::vector<ShiftData>& shifts,
                             const std::vector<InterfaceLaw>& laws,
                             const MaterialParams& mat, const DofMap& dofs,
                             bool with_hessian, SystemBlocks& blocks);

/// Strong-mode coupling blocks G_p, G_u pairing bulk test functions with
/// the interface unknowns. Requires a strong-mode dof map.
void assemble_coupling(const SplitMesh& mesh,
                       const std::vector<ShiftData>& shifts,
                       const DofMap& dofs, SystemBlocks& blocks);

void assemble_rhs(const SplitMesh& mesh, const DofMap& dofs,
                  const std::vector<SourceTerm>& sources, double t,
                  SystemBlocks& blocks);

/// Benchmark boundary conditions: u = 0 on the left/right sides, p = 0 on
/// all four sides. Duplicated boundary nodes each carry their own
/// constraint.
ConstraintSet benchmark_constraints(const SplitMesh& mesh, const DofMap& dofs);

/// Writes a sparse matrix as text triplets (row col value per line).
void dump_triplets(const SpMat& m, std::ostream& os);

}  // namespace sifem
