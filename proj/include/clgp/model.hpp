#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "clgp/dataset.hpp"
#include "clgp/kernels.hpp"
#include "clgp/linalg.hpp"

namespace clgp {

using Rng = std::mt19937_64;

class IndexOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};
class TargetObserved : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class UnknownRow : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Relative diagonal nugget added to every inducing gram matrix before it is
// factored, as a multiple of its mean diagonal.
inline constexpr double kInducingNugget = 1e-6;

/// All free parameters of the variational posterior.
struct Parameters {
  Matrix m;                              // N x Q latent means
  Matrix log_s;                          // N x Q latent log standard deviations
  Matrix Z;                              // M x Q inducing inputs
  std::vector<Matrix> mu;                // per variable: M x K_d, column k is mu_{d,k+1}
  std::vector<Matrix> L_raw;             // per variable: M x M lower, log diagonal
  std::vector<kernels::KernelParams> kernel;

  int rows() const { return static_cast<int>(m.rows()); }
  int latent_dim() const { return static_cast<int>(m.cols()); }
  int inducing() const { return static_cast<int>(Z.rows()); }
  int variables() const { return static_cast<int>(mu.size()); }
  int logits(int d) const { return static_cast<int>(mu[d].cols()); }

  /// Lower-triangular L_d with exponentiated diagonal.
  Matrix cholesky_factor(int d) const;
};

/// Parameter groups of the alternating schedule.
enum class Group { Latent, Inducing };

struct ParamBlock {
  std::string name;
  Group group;
  std::span<double> values;
  Eigen::Index rows = 0;            // column-major layout when matrix-shaped
  bool lower_triangular = false;    // only entries with row >= col are free

  bool is_free(std::size_t i) const {
    if (!lower_triangular) return true;
    const auto r = static_cast<Eigen::Index>(i) % rows;
    const auto c = static_cast<Eigen::Index>(i) / rows;
    return r >= c;
  }
};

/// Enumerates every parameter array in a fixed order. Spans alias `p`.
std::vector<ParamBlock> parameter_blocks(Parameters& p);
std::size_t parameter_count(const Parameters& p);

struct GradientBundle : Parameters {
  static GradientBundle zeros_like(const Parameters& p);
  bool all_finite() const;
};

struct VariationalState {
  Parameters params;
  double sigma_x = 1.0;
  bool include_kl_u = true;       // false for the linear LGM baseline
  std::uint64_t seed = 0;         // training seed, recorded for provenance

  void validate_against(const CategoricalDataset& data) const;
};

/// Fixed standard-normal draws that make the ELBO a deterministic function of
/// the parameters.
struct EpsilonDraws {
  int T = 0;
  std::vector<Matrix> x;                 // [t]: N x Q
  std::vector<std::vector<Matrix>> u;    // [t][d]: M x K_d
  std::vector<std::vector<Matrix>> f;    // [t][d]: N x K_d

  static EpsilonDraws draw(const Parameters& shape, int T, Rng& rng);
  static EpsilonDraws zeros(const Parameters& shape, int T);
};

struct ElboReport {
  double elbo = 0.0;
  double kl_x = 0.0;
  double kl_u = 0.0;
  std::vector<double> per_sample_loglik;  // total log-likelihood per MC sample
  double mc_std = 0.0;                    // sample std of per_sample_loglik
  int clamped = 0;                        // conditional variances clamped to 0

  double mean_loglik() const;
};

// --- Softmax with reference class f_0 = 0 -----------------------------------

/// log(1 + sum_k exp(f_k)), overflow safe.
double lse(std::span<const double> f);
/// log p(y | f) for y in 0..K with f_0 pinned to 0.
double log_softmax_prob(int y, std::span<const double> f);
/// Full probability vector of length K + 1.
std::vector<double> softmax_probs(std::span<const double> f);

// --- Sparse GP conditional --------------------------------------------------

struct InducingFactor {
  linalg::CholeskyFactor chol;   // of gram(Z, Z) + jitter I
  double relative_jitter = 0.0;  // total jitter / mean diag(gram(Z, Z))
};

InducingFactor factor_inducing(const kernels::KernelParams& params, const Matrix& Z);

struct ConditionalCoeffs {
  Matrix A;        // M x N, column n = K_MM^{-1} K_Mn
  Vector b;        // N, K_nn - K_nM K_MM^{-1} K_Mn clamped to >= 0
  Vector b_raw;    // before clamping
  int clamped = 0;
};

ConditionalCoeffs conditional_coeffs(const kernels::KernelParams& params,
                                     const Matrix& Z, const Matrix& X);
ConditionalCoeffs conditional_coeffs(const kernels::KernelParams& params,
                                     const Matrix& Z, const Matrix& X,
                                     const InducingFactor& factor);

// --- Reparameterized sampling -----------------------------------------------

Matrix sample_x(const Matrix& m, const Matrix& log_s, const Matrix& eps_x);
Vector sample_u(const Vector& mu, const Matrix& L, const Vector& eps_u);
/// f_k = a^T u_k + sqrt(b) eps_k, U holding u_k as columns.
Vector sample_f(const Vector& a, double b, const Matrix& U, const Vector& eps_f);

// --- KL terms ---------------------------------------------------------------

double kl_x(const Matrix& m, const Matrix& log_s, double sigma_x);
/// Sum over the columns of mu of KL(N(mu_k, L L^T) || N(0, Kmm)).
double kl_u(const Matrix& mu, const Matrix& L, const linalg::CholeskyFactor& kmm);

// --- Objective ----------------------------------------------------------------

enum class Execution { Serial, Parallel };

/// Which parameter gradients an evaluation must produce. Latent covers
/// m, log_s, Z and kernel hyperparameters; Inducing covers mu and L_raw.
struct GradientScope {
  bool latent = true;
  bool inducing = true;
  static GradientScope all() { return {true, true}; }
  static GradientScope only(Group g) {
    return g == Group::Latent ? GradientScope{true, false} : GradientScope{false, true};
  }
};

ElboReport elbo(const VariationalState& state, const CategoricalDataset& data,
                const EpsilonDraws& eps, Execution exec = Execution::Parallel);

// --- Prediction -----------------------------------------------------------------

struct PredictiveEntry {
  int row = 0;
  int variable = 0;
  std::vector<double> probs;  // K_d + 1 entries summing to 1
};

struct PredictiveTable {
  std::vector<PredictiveEntry> entries;
};

struct CellRef {
  int row = 0;
  int variable = 0;
};

inline constexpr int kDefaultPredictiveSamples = 100;

/// Monte Carlo posterior predictive for missing cells, averaging the softmax
/// over fresh draws of x_n, U_d and f_nd.
PredictiveTable predictive_probs(const VariationalState& state,
                                 const CategoricalDataset& data,
                                 const std::vector<CellRef>& targets,
                                 int samples, std::uint64_t seed,
                                 Execution exec = Execution::Parallel);

/// Every missing cell of `data`, in row-major order.
std::vector<CellRef> missing_cells(const CategoricalDataset& data);

}  // namespace clgp
