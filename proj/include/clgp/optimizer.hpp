#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clgp/gradients.hpp"
#include "clgp/model.hpp"

namespace clgp {

struct RmsPropConfig {
  double rho = 0.9;
  double learning_rate = 0.01;
  double epsilon = 1e-6;
  double decay_factor = 0.5;   // learning rate multiplier ...
  int decay_every = 250;       // ... applied every this many iterations

  double rate_at(int iteration) const;
};

struct RmsPropState {
  Parameters accumulators;  // shape-matched, nonnegative
  RmsPropConfig config;

  static RmsPropState for_params(const Parameters& p, const RmsPropConfig& config);
};

/// One ascent step on the blocks of `group`; other blocks and their
/// accumulators are untouched.
///   acc <- rho acc + (1 - rho) g^2;   theta <- theta + lr g / (sqrt(acc) + eps)
void rmsprop_step(Parameters& params, const GradientBundle& grad, RmsPropState& state,
                  Group group, double learning_rate);
/// Same, applied to every block.
void rmsprop_step(Parameters& params, const GradientBundle& grad, RmsPropState& state,
                  double learning_rate);

enum class ModelKind { Clgp, Lgm };

const char* model_name(ModelKind kind);

struct InitConfig {
  double latent_std = 0.1;        // initial s_n
  double lengthscale = 0.1;       // initial ARD lengthscales
  double mu_std = 1e-2;           // std of the initial inducing output means
  double inducing_std = 0.1;      // initial diag(L_d)
  double signal_variance = 1.0;   // initial kernel signal variance
  double bias_variance = 1.0;     // initial linear-kernel bias variance
};

struct TrainConfig {
  int latent_dim = 2;
  int inducing = 50;
  int mc_samples = 20;
  int iterations = 500;
  std::uint64_t seed = 0;
  bool alternating = true;
  ModelKind model = ModelKind::Clgp;
  // Per-variable override of the kernel family; empty means "follow model".
  std::vector<kernels::KernelKind> kernel_per_variable;
  bool optimize_hyperparams = true;
  bool linear_bias = true;
  double sigma_x = 1.0;
  InitConfig init;
  RmsPropConfig rmsprop;

  void validate() const;
};

VariationalState init_state(const CategoricalDataset& data, const TrainConfig& config,
                            Rng& rng);

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

struct TrainingTrace {
  std::vector<ElboReport> iterations;
  std::vector<std::string> assumptions;  // emitted as header comments on export
};

struct TrainCallbacks {
  std::function<void(int iteration, const ElboReport& report)> on_iteration;
};

struct TrainResult {
  VariationalState state;
  TrainingTrace trace;
};

/// Alternating RMSPROP ascent on the Monte Carlo ELBO. Each iteration steps
/// {m, log_s, Z, kernel} on one set of draws, then {mu, L_raw} on fresh draws.
TrainResult train(const CategoricalDataset& data, const TrainConfig& config,
                  const TrainCallbacks& callbacks = {},
                  Execution exec = Execution::Parallel);

}  // namespace clgp
