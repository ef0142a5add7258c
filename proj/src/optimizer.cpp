#include "clgp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "clgp/random.hpp"

namespace clgp {

double RmsPropConfig::rate_at(int iteration) const {
  if (decay_every <= 0) return learning_rate;
  return learning_rate * std::pow(decay_factor, iteration / decay_every);
}

RmsPropState RmsPropState::for_params(const Parameters& p, const RmsPropConfig& config) {
  return {GradientBundle::zeros_like(p), config};
}

namespace {

void step_blocks(Parameters& params, const GradientBundle& grad, RmsPropState& state,
                 const Group* only, double learning_rate) {
  auto pb = parameter_blocks(params);
  auto gb = parameter_blocks(const_cast<GradientBundle&>(grad));
  auto ab = parameter_blocks(state.accumulators);
  if (pb.size() != gb.size() || pb.size() != ab.size()) {
    throw std::invalid_argument("rmsprop_step: parameter layout mismatch");
  }
  const double rho = state.config.rho;
  const double eps = state.config.epsilon;
  for (std::size_t b = 0; b < pb.size(); ++b) {
    if (only && pb[b].group != *only) continue;
    auto theta = pb[b].values;
    auto g = gb[b].values;
    auto acc = ab[b].values;
    if (theta.size() != g.size() || theta.size() != acc.size()) {
      throw std::invalid_argument("rmsprop_step: block " + pb[b].name + " shape mismatch");
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      acc[i] = rho * acc[i] + (1.0 - rho) * g[i] * g[i];
      theta[i] += learning_rate * g[i] / (std::sqrt(acc[i]) + eps);
    }
  }
}

}  // namespace

void rmsprop_step(Parameters& params, const GradientBundle& grad, RmsPropState& state,
                  Group group, double learning_rate) {
  step_blocks(params, grad, state, &group, learning_rate);
}

void rmsprop_step(Parameters& params, const GradientBundle& grad, RmsPropState& state,
                  double learning_rate) {
  step_blocks(params, grad, state, nullptr, learning_rate);
}

const char* model_name(ModelKind kind) { return kind == ModelKind::Clgp ? "clgp" : "lgm"; }

void TrainConfig::validate() const {
  std::ostringstream msg;
  if (latent_dim < 1) msg << "latent_dim must be positive";
  else if (inducing < 1) msg << "inducing must be positive";
  else if (mc_samples < 1) msg << "mc_samples must be positive";
  else if (iterations < 0) msg << "iterations must be nonnegative";
  else if (!(rmsprop.learning_rate > 0.0) || !(rmsprop.rho > 0.0) || !(rmsprop.rho < 1.0) ||
           !(rmsprop.epsilon > 0.0)) {
    msg << "invalid RMSPROP hyperparameters";
  } else if (!(sigma_x > 0.0)) msg << "sigma_x must be positive";
  else if (!(init.latent_std > 0.0) || !(init.lengthscale > 0.0) ||
           !(init.inducing_std > 0.0) || !(init.signal_variance > 0.0) ||
           !(init.bias_variance > 0.0) || init.mu_std < 0.0) {
    msg << "invalid initialization constants";
  }
  if (!msg.str().empty()) throw std::invalid_argument("TrainConfig: " + msg.str());
}

VariationalState init_state(const CategoricalDataset& data, const TrainConfig& config,
                            Rng& rng) {
  config.validate();
  const int N = data.rows();
  const int Q = config.latent_dim;
  const int M = config.inducing;
  const int D = data.variables();
  if (!config.kernel_per_variable.empty() &&
      static_cast<int>(config.kernel_per_variable.size()) != D) {
    throw std::invalid_argument("TrainConfig: kernel_per_variable needs one entry per variable");
  }

  VariationalState state;
  state.sigma_x = config.sigma_x;
  state.include_kl_u = config.model == ModelKind::Clgp;
  state.seed = config.seed;
  Parameters& p = state.params;

  p.m = standard_normal_matrix(N, Q, rng);
  p.log_s = Matrix::Constant(N, Q, std::log(config.init.latent_std));

  if (M <= N) {
    std::vector<int> rows(N);
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    p.Z.resize(M, Q);
    for (int i = 0; i < M; ++i) p.Z.row(i) = p.m.row(rows[i]);
  } else {
    p.Z = standard_normal_matrix(M, Q, rng);
  }

  for (int d = 0; d < D; ++d) {
    p.mu.push_back(config.init.mu_std * standard_normal_matrix(M, data.cardinality(d), rng).array());
    p.L_raw.push_back(Matrix::Identity(M, M) * std::log(config.init.inducing_std));

    kernels::KernelKind kind = config.model == ModelKind::Clgp ? kernels::KernelKind::ArdRbf
                                                               : kernels::KernelKind::Linear;
    if (!config.kernel_per_variable.empty()) kind = config.kernel_per_variable[d];
    if (kind == kernels::KernelKind::ArdRbf) {
      kernels::ArdRbfParams k;
      k.log_signal_variance = std::log(config.init.signal_variance);
      k.log_lengthscales = Vector::Constant(Q, std::log(config.init.lengthscale));
      p.kernel.push_back(k);
    } else {
      kernels::LinearKernelParams k;
      k.log_signal_variance = std::log(config.init.signal_variance);
      k.log_bias_variance = std::log(config.init.bias_variance);
      k.use_bias = config.linear_bias;
      p.kernel.push_back(k);
    }
  }
  return state;
}

namespace {

void zero_kernel_grads(GradientBundle& g) {
  for (auto& k : g.kernel) k = kernels::zeros_like(k);
}

void check_finite(const ElboReport& r, const GradientBundle& g, int iteration) {
  if (!std::isfinite(r.elbo) || !g.all_finite()) {
    std::ostringstream msg;
    msg << "ELBO or gradient became non-finite at iteration " << iteration;
    throw TrainingDiverged(msg.str(), iteration);
  }
}

}  // namespace

TrainResult train(const CategoricalDataset& data, const TrainConfig& config,
                  const TrainCallbacks& callbacks, Execution exec) {
  Rng rng(config.seed);
  TrainResult result{init_state(data, config, rng), {}};
  VariationalState& state = result.state;
  RmsPropState opt = RmsPropState::for_params(state.params, config.rmsprop);

  {
    std::ostringstream a;
    a << "rmsprop rho=" << config.rmsprop.rho << " lr=" << config.rmsprop.learning_rate
      << " eps=" << config.rmsprop.epsilon << " decay=" << config.rmsprop.decay_factor
      << " every=" << config.rmsprop.decay_every;
    result.trace.assumptions.push_back(a.str());
    result.trace.assumptions.push_back(
        config.alternating ? "schedule=alternating, fresh draws for each half-step"
                           : "schedule=joint");
    std::ostringstream b;
    b << "model=" << model_name(config.model) << " Q=" << config.latent_dim
      << " M=" << config.inducing << " T=" << config.mc_samples
      << " iterations=" << config.iterations << " seed=" << config.seed
      << " optimize_hyperparams=" << (config.optimize_hyperparams ? 1 : 0);
    result.trace.assumptions.push_back(b.str());
  }

  for (int it = 0; it < config.iterations; ++it) {
    const double lr = config.rmsprop.rate_at(it);
    if (config.alternating) {
      EpsilonDraws eps = EpsilonDraws::draw(state.params, config.mc_samples, rng);
      auto [report, grad] =
          elbo_grad(state, data, eps, GradientScope::only(Group::Latent), exec);
      check_finite(report, grad, it);
      if (!config.optimize_hyperparams) zero_kernel_grads(grad);
      rmsprop_step(state.params, grad, opt, Group::Latent, lr);

      eps = EpsilonDraws::draw(state.params, config.mc_samples, rng);
      auto [report_b, grad_b] =
          elbo_grad(state, data, eps, GradientScope::only(Group::Inducing), exec);
      check_finite(report_b, grad_b, it);
      rmsprop_step(state.params, grad_b, opt, Group::Inducing, lr);

      if (callbacks.on_iteration) callbacks.on_iteration(it, report);
      result.trace.iterations.push_back(std::move(report));
    } else {
      EpsilonDraws eps = EpsilonDraws::draw(state.params, config.mc_samples, rng);
      auto [report, grad] = elbo_grad(state, data, eps, GradientScope::all(), exec);
      check_finite(report, grad, it);
      if (!config.optimize_hyperparams) zero_kernel_grads(grad);
      rmsprop_step(state.params, grad, opt, lr);
      if (callbacks.on_iteration) callbacks.on_iteration(it, report);
      result.trace.iterations.push_back(std::move(report));
    }
  }
  return result;
}

}  // namespace clgp
