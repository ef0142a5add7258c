#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace clgp {

inline constexpr int kMissing = -1;

class CardinalityViolation : public std::runtime_error {
 public:
  CardinalityViolation(const std::string& what, int row, int column)
      : std::runtime_error(what), row_(row), column_(column) {}
  int row() const { return row_; }
  int column() const { return column_; }

 private:
  int row_;
  int column_;
};

/// N x D table of category indices. Variable d takes values 0..K_d, where K_d
/// is its cardinality (the largest index, so K_d + 1 distinct values and K_d
/// free logits in the model). Missing cells hold kMissing.
class CategoricalDataset {
 public:
  CategoricalDataset() = default;
  CategoricalDataset(int rows, std::vector<int> cardinalities,
                     std::vector<std::string> names = {});

  int rows() const { return rows_; }
  int variables() const { return static_cast<int>(cardinalities_.size()); }
  int cardinality(int d) const { return cardinalities_.at(d); }
  int categories(int d) const { return cardinalities_.at(d) + 1; }
  const std::vector<int>& cardinalities() const { return cardinalities_; }
  const std::vector<std::string>& names() const { return names_; }

  int at(int n, int d) const { return cells_[index(n, d)]; }
  bool missing(int n, int d) const { return at(n, d) == kMissing; }
  /// Throws CardinalityViolation for values outside [0, K_d] other than kMissing.
  void set(int n, int d, int value);

  int observed_count() const;
  int missing_count() const;

  /// Appends a row; its length must equal variables().
  void append_row(const std::vector<int>& values);

  bool operator==(const CategoricalDataset& other) const = default;

 private:
  std::size_t index(int n, int d) const {
    return static_cast<std::size_t>(n) * cardinalities_.size() +
           static_cast<std::size_t>(d);
  }

  int rows_ = 0;
  std::vector<int> cardinalities_;
  std::vector<std::string> names_;
  std::vector<int> cells_;
};

}  // namespace clgp
