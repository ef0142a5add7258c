#include "clgp/dataset.hpp"

#include <algorithm>
#include <sstream>

namespace clgp {

CategoricalDataset::CategoricalDataset(int rows, std::vector<int> cardinalities,
                                       std::vector<std::string> names)
    : rows_(rows), cardinalities_(std::move(cardinalities)), names_(std::move(names)) {
  if (rows < 0) throw std::invalid_argument("dataset: negative row count");
  for (int k : cardinalities_) {
    if (k < 0) throw std::invalid_argument("dataset: negative cardinality");
  }
  if (names_.empty()) {
    for (std::size_t d = 0; d < cardinalities_.size(); ++d) {
      names_.push_back("v" + std::to_string(d));
    }
  }
  if (names_.size() != cardinalities_.size()) {
    throw std::invalid_argument("dataset: one name per variable required");
  }
  cells_.assign(static_cast<std::size_t>(rows) * cardinalities_.size(), kMissing);
}

void CategoricalDataset::set(int n, int d, int value) {
  if (n < 0 || n >= rows_ || d < 0 || d >= variables()) {
    throw std::out_of_range("dataset: cell index out of range");
  }
  if (value != kMissing && (value < 0 || value > cardinalities_[d])) {
    std::ostringstream msg;
    msg << "value " << value << " outside [0, " << cardinalities_[d]
        << "] at row " << n << ", column " << d;
    throw CardinalityViolation(msg.str(), n, d);
  }
  cells_[index(n, d)] = value;
}

int CategoricalDataset::observed_count() const {
  return static_cast<int>(
      std::count_if(cells_.begin(), cells_.end(), [](int v) { return v != kMissing; }));
}

int CategoricalDataset::missing_count() const {
  return static_cast<int>(cells_.size()) - observed_count();
}

void CategoricalDataset::append_row(const std::vector<int>& values) {
  if (static_cast<int>(values.size()) != variables()) {
    throw std::invalid_argument("dataset: row length does not match variable count");
  }
  for (int d = 0; d < variables(); ++d) {
    const int v = values[d];
    if (v != kMissing && (v < 0 || v > cardinalities_[d])) {
      std::ostringstream msg;
      msg << "value " << v << " outside [0, " << cardinalities_[d] << "] at row "
          << rows_ << ", column " << d;
      throw CardinalityViolation(msg.str(), rows_, d);
    }
  }
  cells_.insert(cells_.end(), values.begin(), values.end());
  ++rows_;
}

}  // namespace clgp
