#include <gtest/gtest.h>

#include <cmath>

#include "clgp/data.hpp"
#include "clgp/optimizer.hpp"
#include "fixtures.hpp"

using namespace clgp;

namespace {

Parameters scalar_params(double theta) {
  Parameters p;
  p.m = Matrix::Constant(1, 1, theta);
  p.log_s = Matrix::Zero(1, 1);
  p.Z = Matrix::Zero(1, 1);
  return p;
}

}  // namespace

TEST(RmsProp, ZeroGradientDecaysAccumulator) {
  auto in = fixtures::small_instance(false, 1);
  Parameters before = in.state.params;
  auto state = RmsPropState::for_params(in.state.params, {});
  for (auto& b : parameter_blocks(state.accumulators)) std::fill(b.values.begin(), b.values.end(), 2.0);
  rmsprop_step(in.state.params, GradientBundle::zeros_like(in.state.params), state, 0.01);
  EXPECT_EQ(in.state.params.m, before.m);
  EXPECT_EQ(in.state.params.mu[0], before.mu[0]);
  for (auto& b : parameter_blocks(state.accumulators)) {
    for (double v : b.values) EXPECT_DOUBLE_EQ(v, 1.8);
  }
}

TEST(RmsProp, FirstStepByHand) {
  Parameters p = scalar_params(0.0);
  auto state = RmsPropState::for_params(p, {});
  GradientBundle g = GradientBundle::zeros_like(p);
  g.m(0, 0) = 1.0;
  rmsprop_step(p, g, state, 0.01);
  EXPECT_DOUBLE_EQ(state.accumulators.m(0, 0), 0.1);
  EXPECT_NEAR(p.m(0, 0), 0.01 / (std::sqrt(0.1) + 1e-6), 1e-15);
  EXPECT_NEAR(p.m(0, 0), 0.0316226, 1e-7);
}

TEST(RmsProp, ConstantGradientStepApproachesRate) {
  Parameters p = scalar_params(0.0);
  auto state = RmsPropState::for_params(p, {});
  GradientBundle g = GradientBundle::zeros_like(p);
  g.m(0, 0) = -3.0;
  double prev = 0.0, step = 0.0;
  for (int i = 0; i < 400; ++i) {
    rmsprop_step(p, g, state, 0.01);
    step = p.m(0, 0) - prev;
    prev = p.m(0, 0);
  }
  EXPECT_NEAR(step, -0.01, 1e-8);
  EXPECT_NEAR(state.accumulators.m(0, 0), 9.0, 1e-9);
}

TEST(RmsProp, GroupStepTouchesOnlyItsBlocks) {
  auto in = fixtures::small_instance(false, 2);
  Parameters before = in.state.params;
  auto state = RmsPropState::for_params(in.state.params, {});
  GradientBundle g = GradientBundle::zeros_like(in.state.params);
  for (auto& b : parameter_blocks(g)) std::fill(b.values.begin(), b.values.end(), 1.0);
  rmsprop_step(in.state.params, g, state, Group::Inducing, 0.01);
  EXPECT_EQ(in.state.params.m, before.m);
  EXPECT_EQ(in.state.params.Z, before.Z);
  EXPECT_NE(in.state.params.mu[0], before.mu[0]);
  EXPECT_EQ(state.accumulators.m.cwiseAbs().maxCoeff(), 0.0);
}

TEST(RmsProp, Schedule) {
  RmsPropConfig c;
  EXPECT_DOUBLE_EQ(c.rate_at(0), 0.01);
  EXPECT_DOUBLE_EQ(c.rate_at(249), 0.01);
  EXPECT_DOUBLE_EQ(c.rate_at(250), 0.005);
  EXPECT_DOUBLE_EQ(c.rate_at(500), 0.0025);
}

TEST(Init, DeterministicAndMatchesDefaults) {
  auto data = data::gen_xor(25);
  TrainConfig c;
  Rng a(3), b(3);
  auto s1 = init_state(data, c, a);
  auto s2 = init_state(data, c, b);
  EXPECT_EQ(s1.params.m, s2.params.m);
  EXPECT_EQ(s1.params.Z, s2.params.Z);
  EXPECT_EQ(s1.params.mu[2], s2.params.mu[2]);
  for (int i = 0; i < s1.params.log_s.size(); ++i) EXPECT_EQ(s1.params.log_s.data()[i], std::log(0.1));
  EXPECT_EQ(s1.params.latent_dim(), 2);
  EXPECT_EQ(s1.params.inducing(), 50);
  EXPECT_TRUE(s1.include_kl_u);
  auto& k = std::get<kernels::ArdRbfParams>(s1.params.kernel[0]);
  EXPECT_NEAR(std::exp(k.log_lengthscales[0]), 0.1, 1e-15);
}

TEST(Init, InducingMeanSpread) {
  CategoricalDataset data(10, std::vector<int>(20, 49));
  TrainConfig c;
  c.inducing = 50;
  Rng rng(4);
  auto s = init_state(data, c, rng);
  double sum = 0, sum2 = 0;
  int count = 0;
  for (const auto& mu : s.params.mu) {
    sum += mu.sum();
    sum2 += mu.squaredNorm();
    count += static_cast<int>(mu.size());
  }
  const double mean = sum / count;
  EXPECT_NEAR(std::sqrt(sum2 / count - mean * mean), 0.01, 0.0005);
}

TEST(Init, LgmUsesLinearKernelWithoutKlU) {
  auto data = data::gen_xor(2);
  TrainConfig c;
  c.model = ModelKind::Lgm;
  Rng rng(5);
  auto s = init_state(data, c, rng);
  EXPECT_FALSE(s.include_kl_u);
  for (const auto& k : s.params.kernel) EXPECT_EQ(kernels::kind_of(k), kernels::KernelKind::Linear);
}

TEST(Init, RejectsBadConfig) {
  TrainConfig c;
  c.latent_dim = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.rmsprop.rho = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Train, ZeroIterationsReturnsInit) {
  auto data = data::gen_xor(3);
  TrainConfig c;
  c.iterations = 0;
  c.inducing = 5;
  c.seed = 11;
  auto r = train(data, c);
  Rng rng(11);
  auto init = init_state(data, c, rng);
  EXPECT_EQ(r.state.params.m, init.params.m);
  EXPECT_EQ(r.state.params.mu[1], init.params.mu[1]);
  EXPECT_TRUE(r.trace.iterations.empty());
  EXPECT_EQ(r.trace.assumptions.size(), 3u);
}

TEST(Train, DeterministicAndAscends) {
  auto data = data::gen_xor(5);
  TrainConfig c;
  c.iterations = 60;
  c.inducing = 8;
  c.mc_samples = 5;
  c.seed = 2;
  int calls = 0;
  TrainCallbacks cb{[&](int, const ElboReport&) { ++calls; }};
  auto a = train(data, c, cb, Execution::Serial);
  auto b = train(data, c, {}, Execution::Parallel);
  EXPECT_EQ(calls, 60);
  EXPECT_EQ(a.state.params.m, b.state.params.m);
  EXPECT_EQ(a.state.params.mu[2], b.state.params.mu[2]);
  ASSERT_EQ(a.trace.iterations.size(), 60u);
  EXPECT_GT(a.trace.iterations.back().elbo, a.trace.iterations.front().elbo);
}

TEST(Train, FixedHyperparametersStayPut) {
  auto data = data::gen_xor(3);
  TrainConfig c;
  c.iterations = 10;
  c.inducing = 6;
  c.optimize_hyperparams = false;
  auto r = train(data, c);
  for (const auto& k : r.state.params.kernel) {
    const auto& p = std::get<kernels::ArdRbfParams>(k);
    EXPECT_EQ(p.log_signal_variance, 0.0);
    EXPECT_EQ(p.log_lengthscales[0], std::log(0.1));
  }
}

TEST(Train, DivergenceReportsIteration) {
  auto data = data::gen_xor(3);
  TrainConfig c;
  c.iterations = 5;
  c.inducing = 6;
  c.rmsprop.learning_rate = 1e300;
  try {
    train(data, c);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_GE(e.iteration(), 0);
    EXPECT_LT(e.iteration(), 5);
  }
}
