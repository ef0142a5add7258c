#include "clgp/linalg.hpp"

#include <cmath>
#include <sstream>

namespace clgp::linalg {

namespace {

// Squared pivots below this fraction of the mean diagonal are treated as a
// failed factorization; Eigen only rejects pivots <= 0.
constexpr double kRelativePivotFloor = 1e-13;

void require_symmetric(const Matrix& A) {
  if (A.rows() != A.cols()) {
    throw std::invalid_argument("cholesky: matrix is not square");
  }
  if (!A.allFinite()) {
    throw std::invalid_argument("cholesky: matrix has non-finite entries");
  }
  const double scale = std::max(A.cwiseAbs().maxCoeff(), 1e-300);
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    std::ostringstream msg;
    msg << "cholesky: matrix is not symmetric (max asymmetry " << asym << ")";
    throw std::invalid_argument(msg.str());
  }
}

bool try_factor(const Matrix& A, double jitter, double mean_diag, Matrix& L) {
  Matrix work = A;
  work.diagonal().array() += jitter;
  Eigen::LLT<Matrix, Eigen::Lower> llt(work);
  if (llt.info() != Eigen::Success) return false;
  L = llt.matrixL();
  const double floor = kRelativePivotFloor * std::abs(mean_diag);
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    const double p = L(i, i);
    if (!(p > 0.0) || !std::isfinite(p) || p * p <= floor) return false;
  }
  return true;
}

}  // namespace

CholeskyFactor cholesky(const Matrix& A, const JitterPolicy& policy) {
  require_symmetric(A);
  CholeskyFactor out;
  if (A.rows() == 0) {
    out.L.resize(0, 0);
    return out;
  }
  const double mean_diag = A.diagonal().mean();
  if (try_factor(A, 0.0, mean_diag, out.L)) {
    out.jitter_used = 0.0;
    return out;
  }
  const double base = std::abs(mean_diag) > 0.0 ? std::abs(mean_diag) : 1.0;
  double level = policy.initial;
  for (int attempt = 0; attempt < policy.max_tries; ++attempt) {
    const double jitter = level * base;
    if (try_factor(A, jitter, mean_diag, out.L)) {
      out.jitter_used = jitter;
      return out;
    }
    level *= policy.growth;
  }
  std::ostringstream msg;
  msg << "cholesky: matrix of size " << A.rows()
      << " is not positive definite after " << policy.max_tries
      << " jitter levels";
  throw NotPositiveDefinite(msg.str());
}

Matrix tri_solve(const Matrix& L, const Matrix& B, bool transpose) {
  if (L.rows() != L.cols() || L.rows() != B.rows()) {
    throw std::invalid_argument("tri_solve: incompatible dimensions");
  }
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (L(i, i) == 0.0) {
      std::ostringstream msg;
      msg << "tri_solve: zero diagonal entry at " << i;
      throw SingularFactor(msg.str());
    }
  }
  Matrix X = B;
  if (transpose) {
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(X);
  } else {
    L.triangularView<Eigen::Lower>().solveInPlace(X);
  }
  return X;
}

void spd_solve_in_place(const CholeskyFactor& chol, Eigen::Ref<Matrix> B) {
  if (chol.L.rows() != B.rows()) {
    throw std::invalid_argument("spd_solve: incompatible dimensions");
  }
  chol.L.triangularView<Eigen::Lower>().solveInPlace(B);
  chol.L.triangularView<Eigen::Lower>().transpose().solveInPlace(B);
}

Matrix spd_solve(const CholeskyFactor& chol, const Matrix& B) {
  for (Eigen::Index i = 0; i < chol.L.rows(); ++i) {
    if (chol.L(i, i) == 0.0) throw SingularFactor("spd_solve: zero diagonal");
  }
  Matrix X = B;
  spd_solve_in_place(chol, X);
  return X;
}

double logdet(const CholeskyFactor& chol) {
  return 2.0 * chol.L.diagonal().array().log().sum();
}

}  // namespace clgp::linalg
