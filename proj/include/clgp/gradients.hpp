#pragma once

#include <cstdint>
#include <utility>

#include "clgp/model.hpp"

namespace clgp {

/// Pathwise gradient of elbo(state, data, eps) with respect to every free
/// parameter. The returned report is bit-identical to elbo() for the same
/// inputs. Entries outside `scope` are left at zero.
std::pair<ElboReport, GradientBundle> elbo_grad(
    const VariationalState& state, const CategoricalDataset& data,
    const EpsilonDraws& eps, GradientScope scope = GradientScope::all(),
    Execution exec = Execution::Parallel);

struct FdCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;   // "<block>[index]"
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int checked = 0;
};

/// Central-difference certification of elbo_grad on `sample_count` randomly
/// chosen free scalars. Relative error uses max(|analytic|, |numeric|, 1e-8).
FdCheckResult fd_check(const VariationalState& state, const CategoricalDataset& data,
                       const EpsilonDraws& eps, double h, int sample_count,
                       std::uint64_t seed);

}  // namespace clgp
