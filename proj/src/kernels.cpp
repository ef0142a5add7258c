#include "clgp/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace clgp::kernels {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_same_dim(const Matrix& X, const Matrix& Z, Eigen::Index q) {
  if (X.cols() != q || Z.cols() != q) {
    throw std::invalid_argument("kernel: point dimension does not match hyperparameters");
  }
}

// Squared scaled distances, rows of Xs by rows of Zs.
Matrix scaled_sqdist(const Matrix& Xs, const Matrix& Zs) {
  Matrix D = Matrix::Zero(Xs.rows(), Zs.rows());
  for (Eigen::Index m = 0; m < Zs.rows(); ++m) {
    for (Eigen::Index q = 0; q < Xs.cols(); ++q) {
      D.col(m).array() += (Xs.col(q).array() - Zs(m, q)).square();
    }
  }
  return D;
}

}  // namespace

double ArdRbfParams::signal_variance() const { return std::exp(log_signal_variance); }
double LinearKernelParams::signal_variance() const { return std::exp(log_signal_variance); }
double LinearKernelParams::bias_variance() const {
  return use_bias ? std::exp(log_bias_variance) : 0.0;
}

KernelKind kind_of(const KernelParams& params) {
  return std::holds_alternative<ArdRbfParams>(params) ? KernelKind::ArdRbf
                                                      : KernelKind::Linear;
}

const char* kind_name(KernelKind kind) {
  return kind == KernelKind::ArdRbf ? "ard_rbf" : "linear";
}

Matrix rbf_gram(const ArdRbfParams& params, const Matrix& X, const Matrix& Z) {
  require_same_dim(X, Z, params.log_lengthscales.size());
  const Eigen::RowVectorXd inv_ell =
      (-params.log_lengthscales.array()).exp().matrix().transpose();
  const Matrix Xs = X.array().rowwise() * inv_ell.array();
  const Matrix Zs = Z.array().rowwise() * inv_ell.array();
  Matrix K = scaled_sqdist(Xs, Zs);
  K = params.signal_variance() * (-0.5 * K.array()).exp();
  return K;
}

Vector rbf_diag(const ArdRbfParams& params, const Matrix& X) {
  return Vector::Constant(X.rows(), params.signal_variance());
}

Matrix linear_gram(const LinearKernelParams& params, const Matrix& X, const Matrix& Z) {
  if (X.cols() != Z.cols()) {
    throw std::invalid_argument("kernel: point dimension mismatch");
  }
  Matrix K = params.signal_variance() * (X * Z.transpose());
  if (params.use_bias) K.array() += params.bias_variance();
  return K;
}

Vector linear_diag(const LinearKernelParams& params, const Matrix& X) {
  Vector d = params.signal_variance() * X.rowwise().squaredNorm();
  if (params.use_bias) d.array() += params.bias_variance();
  return d;
}

Matrix gram(const KernelParams& params, const Matrix& X, const Matrix& Z) {
  return std::visit(
      overloaded{[&](const ArdRbfParams& p) { return rbf_gram(p, X, Z); },
                 [&](const LinearKernelParams& p) { return linear_gram(p, X, Z); }},
      params);
}

Vector diag(const KernelParams& params, const Matrix& X) {
  return std::visit(
      overloaded{[&](const ArdRbfParams& p) { return rbf_diag(p, X); },
                 [&](const LinearKernelParams& p) { return linear_diag(p, X); }},
      params);
}

KernelParams zeros_like(const KernelParams& params) {
  return std::visit(
      overloaded{[](const ArdRbfParams& p) -> KernelParams {
                   ArdRbfParams g;
                   g.log_signal_variance = 0.0;
                   g.log_lengthscales = Vector::Zero(p.log_lengthscales.size());
                   return g;
                 },
                 [](const LinearKernelParams& p) -> KernelParams {
                   LinearKernelParams g;
                   g.log_signal_variance = 0.0;
                   g.log_bias_variance = 0.0;
                   g.use_bias = p.use_bias;
                   return g;
                 }},
      params);
}

void gram_backward(const KernelParams& params, const Matrix& X, const Matrix& Z,
                   const Matrix& grad_K, Matrix* grad_X, Matrix* grad_Z,
                   KernelParams* grad_params) {
  if (const auto* rbf = std::get_if<ArdRbfParams>(&params)) {
    const Vector inv_ell2 = (-2.0 * rbf->log_lengthscales.array()).exp();
    const Matrix H = grad_K.cwiseProduct(rbf_gram(*rbf, X, Z));
    const Vector row_sum = H.rowwise().sum();
    const Vector col_sum = H.colwise().sum().transpose();
    const Matrix HZ = H * Z;
    if (grad_X) {
      Matrix g = HZ - (X.array().colwise() * row_sum.array()).matrix();
      *grad_X += (g.array().rowwise() * inv_ell2.transpose().array()).matrix();
    }
    const bool need_hz_t = grad_Z || grad_params;
    Matrix HtX;
    if (need_hz_t) HtX = H.transpose() * X;
    if (grad_Z) {
      Matrix g = HtX - (Z.array().colwise() * col_sum.array()).matrix();
      *grad_Z += (g.array().rowwise() * inv_ell2.transpose().array()).matrix();
    }
    if (grad_params) {
      auto& gp = std::get<ArdRbfParams>(*grad_params);
      gp.log_signal_variance += H.sum();
      for (Eigen::Index q = 0; q < X.cols(); ++q) {
        const double sx = (X.col(q).array().square() * row_sum.array()).sum();
        const double sz = (Z.col(q).array().square() * col_sum.array()).sum();
        const double cross = (X.col(q).array() * HZ.col(q).array()).sum();
        gp.log_lengthscales(q) += (sx + sz - 2.0 * cross) * inv_ell2(q);
      }
    }
    return;
  }
  const auto& lin = std::get<LinearKernelParams>(params);
  const double sf2 = lin.signal_variance();
  if (grad_X) *grad_X += sf2 * (grad_K * Z);
  Matrix GtX;
  if (grad_Z || grad_params) GtX = grad_K.transpose() * X;
  if (grad_Z) *grad_Z += sf2 * GtX;
  if (grad_params) {
    auto& gp = std::get<LinearKernelParams>(*grad_params);
    gp.log_signal_variance += sf2 * GtX.cwiseProduct(Z).sum();
    if (lin.use_bias) gp.log_bias_variance += lin.bias_variance() * grad_K.sum();
  }
}

void diag_backward(const KernelParams& params, const Matrix& X,
                   const Vector& grad_diag, Matrix* grad_X,
                   KernelParams* grad_params) {
  if (const auto* rbf = std::get_if<ArdRbfParams>(&params)) {
    if (grad_params) {
      std::get<ArdRbfParams>(*grad_params).log_signal_variance +=
          rbf->signal_variance() * grad_diag.sum();
    }
    return;
  }
  const auto& lin = std::get<LinearKernelParams>(params);
  const double sf2 = lin.signal_variance();
  if (grad_X) {
    *grad_X += (2.0 * sf2) * (X.array().colwise() * grad_diag.array()).matrix();
  }
  if (grad_params) {
    auto& gp = std::get<LinearKernelParams>(*grad_params);
    gp.log_signal_variance +=
        sf2 * (X.rowwise().squaredNorm().array() * grad_diag.array()).sum();
    if (lin.use_bias) gp.log_bias_variance += lin.bias_variance() * grad_diag.sum();
  }
}

}  // namespace clgp::kernels
