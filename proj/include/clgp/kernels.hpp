#pragma once

#include <variant>

#include "clgp/linalg.hpp"

namespace clgp::kernels {

// Hyperparameters live in the log domain so the optimizer is unconstrained.
struct ArdRbfParams {
  double log_signal_variance = 0.0;
  Vector log_lengthscales;

  double signal_variance() const;
};

struct LinearKernelParams {
  double log_signal_variance = 0.0;
  double log_bias_variance = 0.0;
  bool use_bias = true;

  double signal_variance() const;
  double bias_variance() const;
};

using KernelParams = std::variant<ArdRbfParams, LinearKernelParams>;

enum class KernelKind { ArdRbf, Linear };

KernelKind kind_of(const KernelParams& params);
const char* kind_name(KernelKind kind);

/// k(x, z) = sf2 * exp(-0.5 * sum_q ((x_q - z_q) / l_q)^2); rows of X by rows of Z.
Matrix rbf_gram(const ArdRbfParams& params, const Matrix& X, const Matrix& Z);
Vector rbf_diag(const ArdRbfParams& params, const Matrix& X);

/// k(x, z) = sf2 * x.z + sb2 (bias omitted when use_bias is false).
Matrix linear_gram(const LinearKernelParams& params, const Matrix& X, const Matrix& Z);
Vector linear_diag(const LinearKernelParams& params, const Matrix& X);

Matrix gram(const KernelParams& params, const Matrix& X, const Matrix& Z);
Vector diag(const KernelParams& params, const Matrix& X);

/// A KernelParams of the same alternative and shape with every value zeroed;
/// used to hold gradients with respect to the log hyperparameters.
KernelParams zeros_like(const KernelParams& params);

// Reverse-mode adjoints. Given dL/dK for K = gram(params, X, Z), accumulate
// into dL/dX, dL/dZ and dL/d(log hyperparameters). Null outputs are skipped.
void gram_backward(const KernelParams& params, const Matrix& X, const Matrix& Z,
                   const Matrix& grad_K, Matrix* grad_X, Matrix* grad_Z,
                   KernelParams* grad_params);

void diag_backward(const KernelParams& params, const Matrix& X,
                   const Vector& grad_diag, Matrix* grad_X,
                   KernelParams* grad_params);

}  // namespace clgp::kernels
