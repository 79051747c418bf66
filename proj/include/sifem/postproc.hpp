#pragma once

#include <Eigen/SparseCholesky>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sifem/assembly.hpp"
#include "sifem/solver.hpp"

namespace sifem {

/// L2 projection of element-wise derivatives into the continuous nodal
/// space on the split mesh. The consistent mass matrix is factorized once
/// and reused for every component.
class GradientProjector {
public:
  explicit GradientProjector(const SplitMesh& mesh);

  /// Recovers (d/dx, d/dy) of a field given by nodal coefficients and,
  /// optionally, per-element bubble coefficients (bubble contributions
  /// enter the right-hand side; the result lives in the nodal space).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> recover(
      const Eigen::VectorXd& nodal, const Eigen::VectorXd* bubble = nullptr) const;

  const SpMat& mass() const { return mass_; }

private:
  const SplitMesh* mesh_;
  SpMat mass_;
  Eigen::SimplicialLDLT<SpMat> mass_ldlt_;
};

/// Nodal gradient fields of the primary unknowns.
struct RecoveredGradients {
  Eigen::VectorXd p_x, p_y;
  Eigen::VectorXd u_grad[2][2];  // u_grad[i][j] = d u_i / d x_j
};

RecoveredGradients recover_gradients(const SplitMesh& mesh, const DofMap& dofs,
                                     const Eigen::VectorXd& z);

/// One-sided primary-field values transferred to the true crack at the
/// surrogate path nodes: f(xhat) = f(xtilde) + gap . grad f(xtilde).
struct CrackLineValues {
  std::vector<double> s;
  std::vector<double> p_plus, p_minus;
  std::vector<Vec2> u_plus, u_minus;
};

CrackLineValues transfer_to_true_crack(const SplitMesh& mesh, const DofMap& dofs,
                                       const Eigen::VectorXd& z,
                                       const RecoveredGradients& grads,
                                       const ShiftData& shift, int crack);

enum class ResidualKind {
  FluxConstitutive,        // <q.n> - J
  FluxBalance,             // [[q]].n
  TractionBalanceN,        // ([[sigma]] n).n
  TractionBalanceM,        // ([[sigma]] n).m
  TractionConstitutiveN,   // (<sigma> n - T).n
  TractionConstitutiveM,   // (<sigma> n - T).m
  LambdaFluxConstitutive,
  LambdaFluxBalance,
  LambdaTractionBalanceN,
  LambdaTractionBalanceM,
  LambdaTractionConstitutiveN,
  LambdaTractionConstitutiveM,
};

std::string residual_kind_name(ResidualKind kind);

/// Arc-length-sampled interface residual with per-sample quadrature
/// weights (mapped facet lengths), suitable for trimmed L2 norms.
struct ResidualProfile {
  int crack = 0;
  ResidualKind kind{};
  double crack_length = 0.0;
  std::vector<double> s;
  std::vector<double> value;
  std::vector<double> weight;
};

/// The six diagnostic residuals per crack, sampled at the facet quadrature
/// points mapped through the closest-point projection. In strong mode the
/// six interface-unknown residuals are appended, sampled at path nodes.
std::vector<ResidualProfile> residual_profiles(
    const SplitMesh& mesh, const DofMap& dofs,
    const std::vector<ShiftData>& shifts, const std::vector<InterfaceLaw>& laws,
    const MaterialParams& mat, const State& state,
    const RecoveredGradients& grads);

/// Interface-law residuals evaluated directly at the lambda degrees of
/// freedom (strong mode only; needs no recovered gradients).
std::vector<ResidualProfile> lambda_residual_profiles(
    const SplitMesh& mesh, const DofMap& dofs,
    const std::vector<ShiftData>& shifts, const std::vector<InterfaceLaw>& laws,
    const State& state);

/// Quadrature L2 norm over s in [eps L, (1-eps) L].
double trimmed_norm(const ResidualProfile& profile, double eps);

enum class FieldTag { Pressure, Displacement };

/// Relative discrete L2 error between a coarse solution and the next finer
/// (nested, fine n = 2 coarse n) solution, measured in the coarse
/// consistent-mass norm.
double self_convergence_error(const SplitMesh& coarse_mesh, const DofMap& coarse_dofs,
                              const Eigen::VectorXd& coarse_z,
                              const SplitMesh& fine_mesh, const DofMap& fine_dofs,
                              const Eigen::VectorXd& fine_z, FieldTag field);

/// Legacy-VTK export of the state on the split mesh. With `project_coords`
/// the surrogate crack nodes are moved to their closest-point projections;
/// all other nodes stay in place.
void write_vtk(const std::string& path, const SplitMesh& mesh, const DofMap& dofs,
               const State& state, const RecoveredGradients& grads,
               const MaterialParams& mat, const std::vector<ShiftData>& shifts,
               bool project_coords);

/// CSV export of residual profiles: crack id, s, kind, value, weight.
void write_profiles_csv(const std::string& path,
                        const std::vector<ResidualProfile>& profiles);

}  // namespace sifem
