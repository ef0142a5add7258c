#include "clgp/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>

#include "clgp/fpenv.hpp"
#include "clgp/random.hpp"

namespace clgp {

Matrix Parameters::cholesky_factor(int d) const {
  Matrix L = L_raw[d].triangularView<Eigen::StrictlyLower>();
  L.diagonal() = L_raw[d].diagonal().array().exp().matrix();
  return L;
}

std::vector<ParamBlock> parameter_blocks(Parameters& p) {
  std::vector<ParamBlock> blocks;
  auto add_matrix = [&](std::string name, Group g, Matrix& M, bool lower = false) {
    blocks.push_back({std::move(name), g, std::span<double>(M.data(), M.size()),
                      M.rows(), lower});
  };
  add_matrix("m", Group::Latent, p.m);
  add_matrix("log_s", Group::Latent, p.log_s);
  add_matrix("Z", Group::Latent, p.Z);
  for (std::size_t d = 0; d < p.kernel.size(); ++d) {
    const std::string tag = "[" + std::to_string(d) + "]";
    if (auto* rbf = std::get_if<kernels::ArdRbfParams>(&p.kernel[d])) {
      blocks.push_back({"log_signal_variance" + tag, Group::Latent,
                        std::span<double>(&rbf->log_signal_variance, 1), 1, false});
      blocks.push_back({"log_lengthscales" + tag, Group::Latent,
                        std::span<double>(rbf->log_lengthscales.data(),
                                          rbf->log_lengthscales.size()),
                        rbf->log_lengthscales.size(), false});
    } else {
      auto& lin = std::get<kernels::LinearKernelParams>(p.kernel[d]);
      blocks.push_back({"log_signal_variance" + tag, Group::Latent,
                        std::span<double>(&lin.log_signal_variance, 1), 1, false});
      if (lin.use_bias) {
        blocks.push_back({"log_bias_variance" + tag, Group::Latent,
                          std::span<double>(&lin.log_bias_variance, 1), 1, false});
      }
    }
  }
  for (std::size_t d = 0; d < p.mu.size(); ++d) {
    add_matrix("mu[" + std::to_string(d) + "]", Group::Inducing, p.mu[d]);
  }
  for (std::size_t d = 0; d < p.L_raw.size(); ++d) {
    add_matrix("L_raw[" + std::to_string(d) + "]", Group::Inducing, p.L_raw[d], true);
  }
  return blocks;
}

std::size_t parameter_count(const Parameters& p) {
  std::size_t n = 0;
  for (const auto& b : parameter_blocks(const_cast<Parameters&>(p))) {
    for (std::size_t i = 0; i < b.values.size(); ++i) n += b.is_free(i) ? 1 : 0;
  }
  return n;
}

GradientBundle GradientBundle::zeros_like(const Parameters& p) {
  GradientBundle g;
  g.m = Matrix::Zero(p.m.rows(), p.m.cols());
  g.log_s = Matrix::Zero(p.log_s.rows(), p.log_s.cols());
  g.Z = Matrix::Zero(p.Z.rows(), p.Z.cols());
  for (const auto& mu : p.mu) g.mu.push_back(Matrix::Zero(mu.rows(), mu.cols()));
  for (const auto& L : p.L_raw) g.L_raw.push_back(Matrix::Zero(L.rows(), L.cols()));
  for (const auto& k : p.kernel) g.kernel.push_back(kernels::zeros_like(k));
  return g;
}

bool GradientBundle::all_finite() const {
  for (const auto& b : parameter_blocks(const_cast<GradientBundle&>(*this))) {
    for (double v : b.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void VariationalState::validate_against(const CategoricalDataset& data) const {
  const auto& p = params;
  std::ostringstream msg;
  if (p.m.rows() != data.rows() || p.log_s.rows() != data.rows()) {
    msg << "state has " << p.m.rows() << " latent rows but dataset has " << data.rows();
  } else if (p.variables() != data.variables() ||
             static_cast<int>(p.L_raw.size()) != data.variables() ||
             static_cast<int>(p.kernel.size()) != data.variables()) {
    msg << "state has " << p.variables() << " variables but dataset has "
        << data.variables();
  } else if (p.log_s.cols() != p.m.cols() || p.Z.cols() != p.m.cols()) {
    msg << "latent dimension mismatch between m, log_s and Z";
  } else if (!(sigma_x > 0.0)) {
    msg << "sigma_x must be positive";
  } else {
    for (int d = 0; d < data.variables(); ++d) {
      if (p.mu[d].rows() != p.Z.rows() || p.mu[d].cols() != data.cardinality(d)) {
        msg << "mu[" << d << "] has shape " << p.mu[d].rows() << "x" << p.mu[d].cols()
            << ", expected " << p.Z.rows() << "x" << data.cardinality(d);
        break;
      }
      if (p.L_raw[d].rows() != p.Z.rows() || p.L_raw[d].cols() != p.Z.rows()) {
        msg << "L_raw[" << d << "] is not " << p.Z.rows() << "x" << p.Z.rows();
        break;
      }
      if (const auto* rbf = std::get_if<kernels::ArdRbfParams>(&p.kernel[d])) {
        if (rbf->log_lengthscales.size() != p.m.cols()) {
          msg << "kernel " << d << " has the wrong number of lengthscales";
          break;
        }
      }
    }
  }
  if (!msg.str().empty()) throw std::invalid_argument(msg.str());
}

EpsilonDraws EpsilonDraws::draw(const Parameters& shape, int T, Rng& rng) {
  if (T < 1) throw std::invalid_argument("EpsilonDraws: T must be at least 1");
  EpsilonDraws eps;
  eps.T = T;
  const auto N = shape.m.rows();
  const auto Q = shape.m.cols();
  const auto M = shape.Z.rows();
  eps.x.reserve(T);
  eps.u.resize(T);
  eps.f.resize(T);
  for (int t = 0; t < T; ++t) {
    eps.x.push_back(standard_normal_matrix(N, Q, rng));
    for (int d = 0; d < shape.variables(); ++d) {
      eps.u[t].push_back(standard_normal_matrix(M, shape.logits(d), rng));
      eps.f[t].push_back(standard_normal_matrix(N, shape.logits(d), rng));
    }
  }
  return eps;
}

EpsilonDraws EpsilonDraws::zeros(const Parameters& shape, int T) {
  EpsilonDraws eps;
  eps.T = T;
  const auto N = shape.m.rows();
  const auto M = shape.Z.rows();
  eps.u.resize(T);
  eps.f.resize(T);
  for (int t = 0; t < T; ++t) {
    eps.x.push_back(Matrix::Zero(N, shape.m.cols()));
    for (int d = 0; d < shape.variables(); ++d) {
      eps.u[t].push_back(Matrix::Zero(M, shape.logits(d)));
      eps.f[t].push_back(Matrix::Zero(N, shape.logits(d)));
    }
  }
  return eps;
}

double ElboReport::mean_loglik() const {
  if (per_sample_loglik.empty()) return 0.0;
  double s = 0.0;
  for (double v : per_sample_loglik) s += v;
  return s / static_cast<double>(per_sample_loglik.size());
}

double lse(std::span<const double> f) {
  double mx = 0.0;
  for (double v : f) mx = std::max(mx, v);
  double s = std::exp(-mx);
  for (double v : f) s += std::exp(v - mx);
  return mx + std::log(s);
}

double log_softmax_prob(int y, std::span<const double> f) {
  if (y < 0 || y > static_cast<int>(f.size())) {
    throw IndexOutOfRange("log_softmax_prob: category " + std::to_string(y) +
                          " outside [0, " + std::to_string(f.size()) + "]");
  }
  const double fy = y == 0 ? 0.0 : f[y - 1];
  return fy - lse(f);
}

std::vector<double> softmax_probs(std::span<const double> f) {
  const double z = lse(f);
  std::vector<double> p(f.size() + 1);
  p[0] = std::exp(-z);
  for (std::size_t k = 0; k < f.size(); ++k) p[k + 1] = std::exp(f[k] - z);
  return p;
}

InducingFactor factor_inducing(const kernels::KernelParams& params, const Matrix& Z) {
  Matrix K = kernels::gram(params, Z, Z);
  InducingFactor out;
  if (K.rows() == 0) return out;
  const double mean_diag = K.diagonal().mean();
  const double nugget = kInducingNugget * mean_diag;
  K.diagonal().array() += nugget;
  out.chol = linalg::cholesky(K);
  out.relative_jitter = kInducingNugget + out.chol.jitter_used / mean_diag;
  return out;
}

ConditionalCoeffs conditional_coeffs(const kernels::KernelParams& params,
                                     const Matrix& Z, const Matrix& X) {
  return conditional_coeffs(params, Z, X, factor_inducing(params, Z));
}

ConditionalCoeffs conditional_coeffs(const kernels::KernelParams& params,
                                     const Matrix& Z, const Matrix& X,
                                     const InducingFactor& factor) {
  ConditionalCoeffs out;
  const Matrix Kmn = kernels::gram(params, Z, X);
  out.A = Kmn;
  linalg::spd_solve_in_place(factor.chol, out.A);
  out.b_raw = kernels::diag(params, X) -
              Kmn.cwiseProduct(out.A).colwise().sum().transpose();
  out.b = out.b_raw;
  for (Eigen::Index n = 0; n < out.b.size(); ++n) {
    if (out.b(n) < 0.0) {
      out.b(n) = 0.0;
      ++out.clamped;
    }
  }
  return out;
}

Matrix sample_x(const Matrix& m, const Matrix& log_s, const Matrix& eps_x) {
  return m + (log_s.array().exp() * eps_x.array()).matrix();
}

Vector sample_u(const Vector& mu, const Matrix& L, const Vector& eps_u) {
  return mu + L.triangularView<Eigen::Lower>() * eps_u;
}

Vector sample_f(const Vector& a, double b, const Matrix& U, const Vector& eps_f) {
  return U.transpose() * a + std::sqrt(std::max(b, 0.0)) * eps_f;
}

double kl_x(const Matrix& m, const Matrix& log_s, double sigma_x) {
  const double inv_var = 1.0 / (sigma_x * sigma_x);
  const auto s2 = (2.0 * log_s.array()).exp();
  return (std::log(sigma_x) - log_s.array() + 0.5 * inv_var * (s2 + m.array().square()) - 0.5)
      .sum();
}

double kl_u(const Matrix& mu, const Matrix& L, const linalg::CholeskyFactor& kmm) {
  const auto M = static_cast<double>(L.rows());
  const auto c = static_cast<double>(mu.cols());
  const Matrix V = linalg::tri_solve(kmm.L, L.triangularView<Eigen::Lower>().toDenseMatrix());
  const Matrix W = linalg::tri_solve(kmm.L, mu);
  const double logdet_sigma = 2.0 * L.diagonal().array().abs().log().sum();
  return 0.5 * (c * V.squaredNorm() + W.squaredNorm() - c * M +
                c * linalg::logdet(kmm) - c * logdet_sigma);
}

std::vector<CellRef> missing_cells(const CategoricalDataset& data) {
  std::vector<CellRef> out;
  for (int n = 0; n < data.rows(); ++n) {
    for (int d = 0; d < data.variables(); ++d) {
      if (data.missing(n, d)) out.push_back({n, d});
    }
  }
  return out;
}

PredictiveTable predictive_probs(const VariationalState& state,
                                 const CategoricalDataset& data,
                                 const std::vector<CellRef>& targets, int samples,
                                 std::uint64_t seed, Execution exec) {
  const FlushDenormals ftz;
  const auto& p = state.params;
  if (samples < 1) throw std::invalid_argument("predictive_probs: samples must be >= 1");
  if (data.variables() != p.variables()) {
    throw std::invalid_argument("predictive_probs: variable count mismatch");
  }
  for (const auto& t : targets) {
    if (t.row < 0 || t.row >= p.rows() || t.row >= data.rows()) {
      throw UnknownRow("predictive_probs: row " + std::to_string(t.row) +
                       " has no trained latent");
    }
    if (t.variable < 0 || t.variable >= data.variables()) {
      throw IndexOutOfRange("predictive_probs: variable out of range");
    }
    if (!data.missing(t.row, t.variable)) {
      throw TargetObserved("predictive_probs: cell (" + std::to_string(t.row) + ", " +
                           std::to_string(t.variable) + ") is observed");
    }
  }

  std::vector<InducingFactor> factors;
  std::vector<Matrix> Ls;
  for (int d = 0; d < p.variables(); ++d) {
    factors.push_back(factor_inducing(p.kernel[d], p.Z));
    Ls.push_back(p.cholesky_factor(d));
  }

  PredictiveTable table;
  table.entries.resize(targets.size());
  std::vector<std::exception_ptr> errors(targets.size());
  const auto count = static_cast<long>(targets.size());

  auto work = [&](long i) {
    const FlushDenormals item_ftz;
    try {
      const auto [n, d] = targets[i];
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      const int K = p.logits(d);
      const Eigen::RowVectorXd s = p.log_s.row(n).array().exp();
      std::vector<double> acc(K + 1, 0.0);
      std::vector<double> f(K);
      Matrix x(1, p.latent_dim());
      for (int it = 0; it < samples; ++it) {
        for (int q = 0; q < p.latent_dim(); ++q) {
          x(0, q) = p.m(n, q) + s(q) * standard_normal(rng);
        }
        const ConditionalCoeffs cc = conditional_coeffs(p.kernel[d], p.Z, x, factors[d]);
        const Vector a = cc.A.col(0);
        // Marginalizing U_d for a single cell: a^T u_k ~ N(a^T mu_k, |L^T a|^2).
        const double var_u = (Ls[d].transpose() * a).squaredNorm();
        const double sd = std::sqrt(var_u + cc.b(0));
        const Vector mean = p.mu[d].transpose() * a;
        for (int k = 0; k < K; ++k) f[k] = mean(k) + sd * standard_normal(rng);
        const auto probs = softmax_probs(f);
        for (int k = 0; k <= K; ++k) acc[k] += probs[k];
      }
      for (double& v : acc) v /= samples;
      table.entries[i] = {n, d, std::move(acc)};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i) work(i);
  } else {
    for (long i = 0; i < count; ++i) work(i);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return table;
}

}  // namespace clgp
