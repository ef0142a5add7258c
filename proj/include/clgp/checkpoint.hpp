#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "clgp/dataset.hpp"
#include "clgp/model.hpp"

namespace clgp {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  VariationalState state;
  std::vector<int> cardinalities;
  std::vector<std::string> variable_names;
};

/// Versioned JSON document with every state field, shapes, per-variable
/// kernel types, cardinalities and the training seed. Doubles are written in
/// shortest round-trip form, so save/load is bit-exact. Refuses non-finite
/// values.
std::string checkpoint_to_string(const VariationalState& state, const CategoricalDataset& data);
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const VariationalState& state,
                     const CategoricalDataset& data);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace clgp
