#include "sifem/klu_solver.hpp"

#include <klu.h>

#include <cstring>
#include <vector>

#include "sifem/errors.hpp"

namespace sifem {

struct KluLU::Impl {
  klu_common common;
  klu_symbolic* symbolic = nullptr;
  klu_numeric* numeric = nullptr;
  std::vector<int> Ap, Ai;
  std::vector<double> Ax;
  int n = 0;

  Impl() { klu_defaults(&common); }
  ~Impl() {
    if (numeric != nullptr) klu_free_numeric(&numeric, &common);
    if (symbolic != nullptr) klu_free_symbolic(&symbolic, &common);
  }
};

KluLU::KluLU() : impl_(std::make_unique<Impl>()) {}
KluLU::~KluLU() = default;

bool KluLU::ready() const { return impl_->numeric != nullptr; }

void KluLU::factorize(const Eigen::SparseMatrix<double>& m, bool force_full) {
  if (m.rows() != m.cols()) throw NumericalError("KLU needs a square matrix");
  Eigen::SparseMatrix<double> mc;
  const Eigen::SparseMatrix<double>* src = &m;
  if (!m.isCompressed()) {
    mc = m;
    mc.makeCompressed();
    src = &mc;
  }
  Impl& im = *impl_;
  const int n = static_cast<int>(src->rows());
  const int nnz = static_cast<int>(src->nonZeros());

  const bool same_pattern =
      im.symbolic != nullptr && im.n == n &&
      static_cast<int>(im.Ai.size()) == nnz &&
      std::memcmp(im.Ap.data(), src->outerIndexPtr(), sizeof(int) * (n + 1)) == 0 &&
      std::memcmp(im.Ai.data(), src->innerIndexPtr(), sizeof(int) * nnz) == 0;

  if (!same_pattern) {
    if (im.numeric != nullptr) klu_free_numeric(&im.numeric, &im.common);
    if (im.symbolic != nullptr) klu_free_symbolic(&im.symbolic, &im.common);
    im.n = n;
    im.Ap.assign(src->outerIndexPtr(), src->outerIndexPtr() + n + 1);
    im.Ai.assign(src->innerIndexPtr(), src->innerIndexPtr() + nnz);
    im.symbolic = klu_analyze(n, im.Ap.data(), im.Ai.data(), &im.common);
    if (im.symbolic == nullptr) throw NumericalError("KLU symbolic analysis failed");
  }
  im.Ax.assign(src->valuePtr(), src->valuePtr() + nnz);

  if (im.numeric != nullptr && same_pattern && !force_full) {
    if (klu_refactor(im.Ap.data(), im.Ai.data(), im.Ax.data(), im.symbolic,
                     im.numeric, &im.common) == 1) {
      return;
    }
    klu_free_numeric(&im.numeric, &im.common);
  }
  if (im.numeric != nullptr) klu_free_numeric(&im.numeric, &im.common);
  im.numeric = klu_factor(im.Ap.data(), im.Ai.data(), im.Ax.data(), im.symbolic,
                          &im.common);
  if (im.numeric == nullptr) {
    throw NumericalError("KLU numeric factorization failed (singular matrix?)");
  }
}

Eigen::VectorXd KluLU::solve(const Eigen::VectorXd& b) const {
  Impl& im = *impl_;
  if (im.numeric == nullptr) throw NumericalError("KLU solve before factorization");
  Eigen::VectorXd x = b;
  if (klu_solve(im.symbolic, im.numeric, im.n, 1, x.data(),
                const_cast<klu_common*>(&im.common)) != 1) {
    throw NumericalError("KLU triangular solve failed");
  }
  return x;
}

}  // namespace sifem
