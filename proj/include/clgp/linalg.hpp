#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace clgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(const std::string& what)
      : std::runtime_error(what) {}
};

class SingularFactor : public std::runtime_error {
 public:
  explicit SingularFactor(const std::string& what)
      : std::runtime_error(what) {}
};

// Jitter escalation ladder. Level 0 is always tried first; level i >= 1 adds
// initial * growth^(i-1) * mean(diag(A)) to the diagonal.
struct JitterPolicy {
  double initial = 1e-6;
  double growth = 10.0;
  int max_tries = 6;
};

struct CholeskyFactor {
  Matrix L;                  // lower triangular, strictly positive diagonal
  double jitter_used = 0.0;  // absolute amount added to diag(A)

  Eigen::Index size() const { return L.rows(); }
};

/// Factor A + jitter*I = L L^T using the smallest jitter on the ladder that
/// yields a numerically positive definite factor.
CholeskyFactor cholesky(const Matrix& A, const JitterPolicy& policy = {});

/// Solves L X = B, or L^T X = B when `transpose` is set.
Matrix tri_solve(const Matrix& L, const Matrix& B, bool transpose = false);

/// A^{-1} B through two triangular solves.
Matrix spd_solve(const CholeskyFactor& chol, const Matrix& B);
void spd_solve_in_place(const CholeskyFactor& chol, Eigen::Ref<Matrix> B);

double logdet(const CholeskyFactor& chol);

}  // namespace linalg
}  // namespace clgp
