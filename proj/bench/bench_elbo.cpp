#include <benchmark/benchmark.h>

#include "clgp/data.hpp"
#include "clgp/gradients.hpp"
#include "clgp/optimizer.hpp"
#include "clgp/pcfg.hpp"

using namespace clgp;

namespace {

struct Problem {
  CategoricalDataset data;
  VariationalState state;
  EpsilonDraws eps;
};

Problem make_problem(bool pcfg) {
  Problem p;
  p.data = pcfg ? data::gen_pcfg_triplets(data::default_grammar(), 800, 1) : data::gen_xor(25);
  TrainConfig c;
  Rng rng(0);
  p.state = init_state(p.data, c, rng);
  p.eps = EpsilonDraws::draw(p.state.params, c.mc_samples, rng);
  return p;
}

const Problem& problem(bool pcfg) {
  static const Problem xor_problem = make_problem(false);
  static const Problem pcfg_problem = make_problem(true);
  return pcfg ? pcfg_problem : xor_problem;
}

void BM_Elbo(benchmark::State& st, bool pcfg, Execution exec) {
  const auto& p = problem(pcfg);
  for (auto _ : st) benchmark::DoNotOptimize(elbo(p.state, p.data, p.eps, exec).elbo);
  st.counters["rows"] = p.data.rows();
}

void BM_ElboGrad(benchmark::State& st, bool pcfg, Execution exec) {
  const auto& p = problem(pcfg);
  for (auto _ : st) {
    auto r = elbo_grad(p.state, p.data, p.eps, GradientScope::all(), exec);
    benchmark::DoNotOptimize(r.first.elbo);
  }
  st.counters["rows"] = p.data.rows();
}

void BM_Predictive(benchmark::State& st, Execution exec) {
  const auto& p = problem(false);
  const auto targets = missing_cells(p.data);
  for (auto _ : st) {
    benchmark::DoNotOptimize(predictive_probs(p.state, p.data, targets, 100, 1, exec).entries.size());
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Elbo, xor_serial, false, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Elbo, xor_parallel, false, Execution::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ElboGrad, xor_serial, false, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ElboGrad, xor_parallel, false, Execution::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ElboGrad, pcfg_serial, true, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ElboGrad, pcfg_parallel, true, Execution::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Predictive, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Predictive, parallel, Execution::Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
