#pragma once

#include <random>

#include "clgp/model.hpp"
#include "clgp/random.hpp"

namespace clgp::fixtures {

struct Instance {
  VariationalState state;
  CategoricalDataset data;
  EpsilonDraws eps;
};

// Random small problem with every parameter away from its initial value.
inline Instance small_instance(bool linear, std::uint64_t seed, int N = 8, int D = 2, int Q = 2,
                               int M = -1, int K = 3, int T = 2) {
  if (M < 0) M = linear ? 2 : 3;
  Rng rng(seed);
  std::uniform_int_distribution<int> cat(0, K);
  Instance in{{}, CategoricalDataset(N, std::vector<int>(D, K)), {}};
  for (int n = 0; n < N; ++n)
    for (int d = 0; d < D; ++d) in.data.set(n, d, cat(rng));
  if (N > 3 && D > 1) in.data.set(3, 1, kMissing);
  auto& p = in.state.params;
  p.m = standard_normal_matrix(N, Q, rng);
  p.log_s = -1.0 + 0.3 * standard_normal_matrix(N, Q, rng).array();
  p.Z = standard_normal_matrix(M, Q, rng);
  for (int d = 0; d < D; ++d) {
    p.mu.push_back(0.5 * standard_normal_matrix(M, K, rng));
    Matrix L = 0.3 * standard_normal_matrix(M, M, rng);
    L = L.triangularView<Eigen::Lower>();
    L.diagonal() = (-1.0 + 0.2 * standard_normal_matrix(M, 1, rng).array()).matrix();
    p.L_raw.push_back(L);
    if (linear) {
      kernels::LinearKernelParams lk;
      lk.log_signal_variance = 0.1;
      lk.log_bias_variance = -0.5;
      p.kernel.push_back(lk);
    } else {
      kernels::ArdRbfParams rk;
      rk.log_signal_variance = 0.2;
      rk.log_lengthscales = Vector::Constant(Q, 0.1) + 0.1 * standard_normal_matrix(Q, 1, rng);
      p.kernel.push_back(rk);
    }
  }
  in.state.include_kl_u = !linear;
  in.eps = EpsilonDraws::draw(p, T, rng);
  return in;
}

inline Matrix random_spd(int n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix B = standard_normal_matrix(n, n, rng);
  return B * B.transpose() + n * Matrix::Identity(n, n);
}

}  // namespace clgp::fixtures
