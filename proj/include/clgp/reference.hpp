#pragma once

#include "clgp/model.hpp"

// Straight-line serial evaluation of the objective, one cell at a time, built
// only from the public per-operation functions. Kept as a test oracle for the
// batched kernel in elbo.cpp.
namespace clgp::reference {

ElboReport elbo(const VariationalState& state, const CategoricalDataset& data,
                const EpsilonDraws& eps);

}  // namespace clgp::reference
