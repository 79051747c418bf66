#pragma once

#include <Eigen/Sparse>
#include <memory>

namespace sifem {

/// Sparse LU factorization backed by SuiteSparse KLU. The symbolic
/// analysis is computed once and reused whenever the sparsity pattern is
/// unchanged (numeric refactorization only), which makes repeated
/// factorizations of E + c K across step-size changes cheap.
class KluLU {
public:
  KluLU();
  ~KluLU();
  KluLU(const KluLU&) = delete;
  KluLU& operator=(const KluLU&) = delete;

  /// Factorizes `m` (compressed column storage). Reuses the symbolic
  /// analysis when the pattern matches the previous call; set
  /// `force_full` to redo the pivot search from scratch.
  void factorize(const Eigen::SparseMatrix<double>& m, bool force_full = false);

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  bool ready() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sifem
