#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "sifem/assembly.hpp"
#include "sifem/klu_solver.hpp"

namespace sifem {

/// Time-dependent unknowns. `z` stacks (pressure, displacement) in full
/// (unreduced) numbering; constrained entries stay at their prescribed
/// values. `lambda` holds the interface unknowns in strong mode.
struct State {
  double t = 0.0;
  Eigen::VectorXd z;
  Eigen::VectorXd zdot;
  Eigen::VectorXd lambda;
};

struct TimeControls {
  double atol = 1e-10;
  double rtol = 1e-6;
  double dt_init = 1e-2;   ///< hr
  double dt_min = 1e-12;   ///< hr; underflow below this is fatal
  double safety = 0.9;
  double shrink_min = 0.2;
  double growth_max = 5.0;
};

/// Semidiscrete system E dz/dt + K z = f with homogeneous essential
/// constraints removed by symmetric reduction. In strong mode the linear
/// interface closure lambda = Lz z + Ldot dz/dt is folded into the
/// effective matrices, so the same two-matrix form covers both modes.
class DAESystem {
public:
  DAESystem(const SplitMesh& mesh, const DofMap& dofs, SystemBlocks blocks,
            ConstraintSet constraints, const std::vector<ShiftData>& shifts,
            const std::vector<InterfaceLaw>& laws);

  /// Bare linear system E dz/dt + K z = f without constraints or interface
  /// unknowns; used for integrator verification on small problems.
  DAESystem(SpMat E, SpMat K, Eigen::VectorXd f);

  EnforcementMode mode() const { return mode_; }
  int n_full() const { return n_z_; }
  int n_reduced() const { return static_cast<int>(free_.size()); }
  int n_lambda() const { return blocks_.n_lambda; }

  const SystemBlocks& blocks() const { return blocks_; }
  const SpMat& E_reduced() const { return E_red_; }
  const SpMat& K_reduced() const { return K_red_; }
  const Eigen::VectorXd& f_reduced() const { return f_red_; }

  Eigen::VectorXd reduce(const Eigen::VectorXd& full) const;
  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const;

  /// Interface closure evaluated at a full-state pair.
  Eigen::VectorXd closure_lambda(const Eigen::VectorXd& z_full,
                                 const Eigen::VectorXd& zdot_full) const;

  /// Equilibrium state at t = 0 for a given initial pressure vector
  /// (full pressure dof values; zero in the benchmarks).
  State solve_initial(const Eigen::VectorXd& p0) const;

  /// One SDIRK2 step of size dt from `state`. Returns the candidate state
  /// and the weighted error-norm estimate (accept when <= 1).
  std::pair<State, double> sdirk2_advance(const State& state, double dt,
                                          const TimeControls& controls) const;

  /// Adaptive integration to t_end. `on_accept` (optional) runs after every
  /// accepted step.
  State run_transient(const State& initial, double t_end,
                      const TimeControls& controls,
                      const std::function<void(const State&)>& on_accept = {}) const;

  std::size_t factorization_count() const { return n_factorizations_; }

private:
  void factorize(double dt) const;

  EnforcementMode mode_ = EnforcementMode::Weak;
  SystemBlocks blocks_;
  ConstraintSet constraints_;
  int n_z_ = 0;
  std::vector<int> free_;         // free dof ids, ascending
  std::vector<int> full_to_red_;  // -1 for constrained dofs

  SpMat E_full_, K_full_;
  SpMat E_red_, K_red_;
  Eigen::VectorXd f_red_;
  SpMat lambda_z_, lambda_zdot_;  // closure rows (strong mode)
  SpMat G_full_;                  // stacked coupling (strong mode)

  mutable std::unique_ptr<KluLU> stage_klu_;
  mutable SpMat stage_m_;
  mutable double factored_dt_ = -1.0;
  mutable std::size_t n_factorizations_ = 0;
};

/// Closure matrices lambda = Lz z + Ldot dz/dt built from nodal jumps with
/// gradient shifts taken from the owning surrogate-facet element traces.
void build_closure_operators(const SplitMesh& mesh, const DofMap& dofs,
                             const std::vector<ShiftData>& shifts,
                             const std::vector<InterfaceLaw>& laws,
                             SpMat& lambda_z, SpMat& lambda_zdot);

}  // namespace sifem
