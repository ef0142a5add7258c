#include "clgp/gradients.hpp"

#include <algorithm>
#include <cmath>

namespace clgp {

FdCheckResult fd_check(const VariationalState& state, const CategoricalDataset& data,
                       const EpsilonDraws& eps, double h, int sample_count,
                       std::uint64_t seed) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_check: step must be positive");
  const auto [report, grad] = elbo_grad(state, data, eps);
  (void)report;

  VariationalState probe = state;
  auto probe_blocks = parameter_blocks(probe.params);
  auto grad_blocks = parameter_blocks(const_cast<GradientBundle&>(grad));

  std::vector<std::pair<std::size_t, std::size_t>> free;
  for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
    for (std::size_t i = 0; i < probe_blocks[b].values.size(); ++i) {
      if (probe_blocks[b].is_free(i)) free.emplace_back(b, i);
    }
  }
  Rng rng(seed);
  std::shuffle(free.begin(), free.end(), rng);
  if (sample_count >= 0 && static_cast<std::size_t>(sample_count) < free.size()) {
    free.resize(static_cast<std::size_t>(sample_count));
  }

  FdCheckResult result;
  for (const auto& [b, i] : free) {
    double& slot = probe_blocks[b].values[i];
    const double original = slot;
    slot = original + h;
    const double up = elbo(probe, data, eps).elbo;
    slot = original - h;
    const double down = elbo(probe, data, eps).elbo;
    slot = original;

    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad_blocks[b].values[i];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    const double err = std::abs(analytic - numeric) / denom;
    ++result.checked;
    if (err > result.max_relative_error || result.checked == 1) {
      result.max_relative_error = err;
      result.worst_parameter = probe_blocks[b].name + "[" + std::to_string(i) + "]";
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

}  // namespace clgp
