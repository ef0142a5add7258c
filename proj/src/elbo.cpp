// Monte Carlo ELBO and its pathwise gradient.
//
// Work is split into (sample t, variable d) items. Each item owns its output
// buffers and the reduction runs in item order afterwards, so the serial and
// OpenMP paths return bit-identical results.

#include <cmath>
#include <exception>
#include <sstream>

#include "clgp/fpenv.hpp"
#include "clgp/gradients.hpp"
#include "clgp/model.hpp"

namespace clgp {

namespace {

void check_draws(const Parameters& p, const EpsilonDraws& eps) {
  const auto fail = [](const std::string& what) {
    throw std::invalid_argument("EpsilonDraws: " + what);
  };
  if (eps.T < 1) fail("T must be at least 1");
  if (static_cast<int>(eps.x.size()) != eps.T || static_cast<int>(eps.u.size()) != eps.T ||
      static_cast<int>(eps.f.size()) != eps.T) {
    fail("sample count does not match T");
  }
  for (int t = 0; t < eps.T; ++t) {
    if (eps.x[t].rows() != p.m.rows() || eps.x[t].cols() != p.m.cols()) fail("eps_x shape");
    if (static_cast<int>(eps.u[t].size()) != p.variables() ||
        static_cast<int>(eps.f[t].size()) != p.variables()) {
      fail("variable count");
    }
    for (int d = 0; d < p.variables(); ++d) {
      if (eps.u[t][d].rows() != p.Z.rows() || eps.u[t][d].cols() != p.logits(d)) {
        fail("eps_u shape");
      }
      if (eps.f[t][d].rows() != p.m.rows() || eps.f[t][d].cols() != p.logits(d)) {
        fail("eps_f shape");
      }
    }
  }
}

struct ItemOutput {
  double loglik = 0.0;
  int clamped = 0;
  Matrix g_mu;      // M x K
  Matrix g_L;       // M x M, gradient w.r.t. L_d (not L_raw)
  Matrix g_X;       // N x Q
  Matrix g_Z;       // M x Q, through K_Mn only
  Matrix g_Kmm;     // M x M, adjoint of the jittered inducing gram
  kernels::KernelParams g_kernel;
  std::exception_ptr error;
};

struct Shared {
  const VariationalState& state;
  const CategoricalDataset& data;
  const EpsilonDraws& eps;
  GradientScope scope;
  bool want_grad;
  std::vector<Matrix> X;             // [t]
  std::vector<InducingFactor> factor;  // [d]
  std::vector<Matrix> L;             // [d]
  std::vector<Matrix> Kinv;          // [d], inverse of the jittered inducing gram
};

void run_item(const Shared& sh, int t, int d, ItemOutput& out) {
  const Parameters& p = sh.state.params;
  const auto& kernel = p.kernel[d];
  const Matrix& X = sh.X[t];
  const Matrix& Kinv = sh.Kinv[d];
  const int N = p.rows();
  const int K = p.logits(d);
  const double inv_T = 1.0 / sh.eps.T;

  const Matrix Kmn = kernels::gram(kernel, p.Z, X);
  Matrix A(Kmn.rows(), Kmn.cols());
  A.noalias() = Kinv * Kmn;
  Vector b = kernels::diag(kernel, X) - Kmn.cwiseProduct(A).colwise().sum().transpose();
  Vector sqrt_b(N);
  for (int n = 0; n < N; ++n) {
    if (b(n) < 0.0) {
      b(n) = 0.0;
      ++out.clamped;
    }
    sqrt_b(n) = std::sqrt(b(n));
  }

  const Matrix& eps_u = sh.eps.u[t][d];
  const Matrix& eps_f = sh.eps.f[t][d];
  Matrix U = p.mu[d];
  U.noalias() += sh.L[d].triangularView<Eigen::Lower>() * eps_u;

  // Logits stored K x N so each row's logits are contiguous.
  Matrix F(K, N);
  F.noalias() = U.transpose() * A;
  F.noalias() += eps_f.transpose() * sqrt_b.asDiagonal();

  Matrix G;
  if (sh.want_grad) G = Matrix::Zero(K, N);
  double ll = 0.0;
  for (int n = 0; n < N; ++n) {
    const int y = sh.data.at(n, d);
    if (y == kMissing) continue;
    const std::span<const double> f(F.col(n).data(), static_cast<std::size_t>(K));
    const double z = lse(f);
    ll += (y == 0 ? 0.0 : f[y - 1]) - z;
    if (sh.want_grad) {
      for (int k = 0; k < K; ++k) G(k, n) = -std::exp(f[k] - z) * inv_T;
      if (y > 0) G(y - 1, n) += inv_T;
    }
  }
  out.loglik = ll;
  if (!sh.want_grad) return;

  if (sh.scope.inducing) {
    out.g_mu.noalias() = A * G.transpose();
    out.g_L.noalias() = out.g_mu * eps_u.transpose();
    out.g_L = out.g_L.triangularView<Eigen::Lower>();
  }

  if (!sh.scope.latent) return;
  const int M = p.inducing();
  const Matrix gA = U * G;  // M x N
  Vector g_b = Vector::Zero(N);
  for (int n = 0; n < N; ++n) {
    // Clamped (or exactly zero) variances pass no gradient.
    if (b(n) > 0.0) g_b(n) = G.col(n).dot(eps_f.row(n).transpose()) / (2.0 * sqrt_b(n));
  }
  Matrix W(gA.rows(), gA.cols());
  W.noalias() = Kinv * gA;  // K^{-1} dL/dA
  const Matrix A_gb = A * g_b.asDiagonal();
  const Matrix gKmn = W - 2.0 * A_gb;
  out.g_Kmm.noalias() = -(W - A_gb) * A.transpose();

  out.g_X = Matrix::Zero(N, p.latent_dim());
  out.g_Z = Matrix::Zero(M, p.latent_dim());
  out.g_kernel = kernels::zeros_like(kernel);
  kernels::gram_backward(kernel, p.Z, X, gKmn, &out.g_Z, &out.g_X, &out.g_kernel);
  kernels::diag_backward(kernel, X, g_b, &out.g_X, &out.g_kernel);
}

void add_kernel(kernels::KernelParams& into, const kernels::KernelParams& g) {
  if (auto* r = std::get_if<kernels::ArdRbfParams>(&into)) {
    const auto& gr = std::get<kernels::ArdRbfParams>(g);
    r->log_signal_variance += gr.log_signal_variance;
    r->log_lengthscales += gr.log_lengthscales;
  } else {
    auto& l = std::get<kernels::LinearKernelParams>(into);
    const auto& gl = std::get<kernels::LinearKernelParams>(g);
    l.log_signal_variance += gl.log_signal_variance;
    l.log_bias_variance += gl.log_bias_variance;
  }
}

ElboReport evaluate(const VariationalState& state, const CategoricalDataset& data,
                    const EpsilonDraws& eps, GradientScope scope, bool want_grad,
                    Execution exec, GradientBundle* grad) {
  const FlushDenormals ftz;
  state.validate_against(data);
  const Parameters& p = state.params;
  check_draws(p, eps);
  const int T = eps.T;
  const int D = p.variables();
  const int M = p.inducing();

  Shared sh{state, data, eps, scope, want_grad, {}, {}, {}, {}};
  sh.X.reserve(T);
  for (int t = 0; t < T; ++t) sh.X.push_back(sample_x(p.m, p.log_s, eps.x[t]));
  for (int d = 0; d < D; ++d) {
    sh.factor.push_back(factor_inducing(p.kernel[d], p.Z));
    sh.L.push_back(p.cholesky_factor(d));
    Matrix inv = linalg::spd_solve(sh.factor.back().chol, Matrix::Identity(p.inducing(), p.inducing()));
    sh.Kinv.push_back(0.5 * (inv + inv.transpose()));
  }

  const long items = static_cast<long>(T) * D;
  std::vector<ItemOutput> out(static_cast<std::size_t>(items));
  auto work = [&](long i) {
    const FlushDenormals item_ftz;
    try {
      run_item(sh, static_cast<int>(i / D), static_cast<int>(i % D), out[i]);
    } catch (...) {
      out[i].error = std::current_exception();
    }
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < items; ++i) work(i);
  } else {
    for (long i = 0; i < items; ++i) work(i);
  }
  for (const auto& o : out) {
    if (o.error) std::rethrow_exception(o.error);
  }

  ElboReport report;
  report.per_sample_loglik.assign(T, 0.0);
  for (int t = 0; t < T; ++t) {
    for (int d = 0; d < D; ++d) {
      const auto& o = out[static_cast<std::size_t>(t) * D + d];
      report.per_sample_loglik[t] += o.loglik;
      report.clamped += o.clamped;
    }
  }
  const double mean = report.mean_loglik();
  if (T > 1) {
    double ss = 0.0;
    for (double v : report.per_sample_loglik) ss += (v - mean) * (v - mean);
    report.mc_std = std::sqrt(ss / (T - 1));
  }

  report.kl_x = kl_x(p.m, p.log_s, state.sigma_x);
  report.kl_u = 0.0;
  if (state.include_kl_u) {
    for (int d = 0; d < D; ++d) {
      report.kl_u += kl_u(p.mu[d], sh.L[d], sh.factor[d].chol);
    }
  }
  report.elbo = -report.kl_x - report.kl_u + mean;
  if (!want_grad) return report;

  GradientBundle& g = *grad;
  g = GradientBundle::zeros_like(p);
  const double inv_var_x = 1.0 / (state.sigma_x * state.sigma_x);
  const Matrix s = p.log_s.array().exp();

  if (scope.latent) {
    for (int t = 0; t < T; ++t) {
      Matrix gX = Matrix::Zero(p.rows(), p.latent_dim());
      for (int d = 0; d < D; ++d) gX += out[static_cast<std::size_t>(t) * D + d].g_X;
      g.m += gX;
      g.log_s += (gX.array() * s.array() * eps.x[t].array()).matrix();
    }
    g.m -= inv_var_x * p.m;
    g.log_s -= (s.array().square() * inv_var_x - 1.0).matrix();
  }

  for (int d = 0; d < D; ++d) {
    const auto& chol = sh.factor[d].chol;
    const Matrix& L = sh.L[d];
    const double c = p.logits(d);
    Matrix g_L = Matrix::Zero(M, M);
    Matrix g_Kmm = Matrix::Zero(M, M);
    for (int t = 0; t < T; ++t) {
      const auto& o = out[static_cast<std::size_t>(t) * D + d];
      if (scope.inducing) {
        g.mu[d] += o.g_mu;
        g_L += o.g_L;
      }
      if (scope.latent) {
        g_Kmm += o.g_Kmm;
        g.Z += o.g_Z;
        add_kernel(g.kernel[d], o.g_kernel);
      }
    }

    if (state.include_kl_u) {
      const Matrix Kinv_mu = linalg::spd_solve(chol, p.mu[d]);
      const Matrix Kinv_L = linalg::spd_solve(chol, L);
      if (scope.inducing) {
        g.mu[d] -= Kinv_mu;
        Matrix kl_L = c * Kinv_L;
        kl_L.diagonal().array() -= c / L.diagonal().array();
        g_L -= Matrix(kl_L.triangularView<Eigen::Lower>());
      }
      if (scope.latent) {
        // dKL/dK = 0.5 [c K^-1 - c K^-1 S K^-1 - K^-1 mu mu^T K^-1]
        const Matrix Kinv = linalg::spd_solve(chol, Matrix::Identity(M, M));
        Matrix dK = c * Kinv;
        dK.noalias() -= c * Kinv_L * Kinv_L.transpose();
        dK.noalias() -= Kinv_mu * Kinv_mu.transpose();
        g_Kmm -= 0.5 * dK;
      }
    }

    if (scope.inducing) {
      // Chain to the log-diagonal parameterization.
      Matrix& gr = g.L_raw[d];
      gr = g_L.triangularView<Eigen::Lower>();
      gr.diagonal().array() *= L.diagonal().array();
    }
    if (scope.latent && M > 0) {
      // The jitter multiplier is frozen; its scale, mean(diag gram), is not.
      Matrix g_gram = g_Kmm;
      g_gram.diagonal().array() += sh.factor[d].relative_jitter / M * g_Kmm.trace();
      kernels::gram_backward(p.kernel[d], p.Z, p.Z, g_gram, &g.Z, &g.Z, &g.kernel[d]);
    }
  }
  return report;
}

}  // namespace

ElboReport elbo(const VariationalState& state, const CategoricalDataset& data,
                const EpsilonDraws& eps, Execution exec) {
  return evaluate(state, data, eps, GradientScope::all(), false, exec, nullptr);
}

std::pair<ElboReport, GradientBundle> elbo_grad(const VariationalState& state,
                                                const CategoricalDataset& data,
                                                const EpsilonDraws& eps,
                                                GradientScope scope, Execution exec) {
  GradientBundle g;
  ElboReport r = evaluate(state, data, eps, scope, true, exec, &g);
  return {std::move(r), std::move(g)};
}

}  // namespace clgp
