#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "clgp/dataset.hpp"

namespace clgp::data {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column)
      : std::runtime_error(what), line_(line), column_(column) {}
  /// 1-based line in the file (the header is line 1) and 1-based field.
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Dataset text format:
//
//   colour,shape:4,size
//   0,1,2
//   1,?,0
//
// A header field `name:K` declares that the variable takes values 0..K.
// Undeclared cardinalities are the largest observed index (at least 1).
// `?` marks a missing cell. Blank lines and lines starting with '#' are
// skipped. Saving always writes declared cardinalities.
CategoricalDataset read_dataset(std::istream& in);
CategoricalDataset load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const CategoricalDataset& data);
void save_dataset(const std::filesystem::path& path, const CategoricalDataset& data);

/// Ground truth for cells hidden from the model.
struct AnswerKey {
  struct Cell {
    int row = 0;
    int variable = 0;
    int value = 0;
    bool operator==(const Cell&) const = default;
  };
  std::vector<Cell> cells;
  bool operator==(const AnswerKey&) const = default;
};

void write_answers(std::ostream& out, const AnswerKey& key);
AnswerKey read_answers(std::istream& in);
AnswerKey load_answers(const std::filesystem::path& path);
void save_answers(const std::filesystem::path& path, const AnswerKey& key);

/// Model-visible data together with the key for its hidden cells.
struct TaskSplit {
  CategoricalDataset visible;
  AnswerKey answers;
  std::vector<int> test_rows;  // ascending
};

/// n copies of each XOR triplet followed by the four test rows (a, b, ?).
CategoricalDataset gen_xor(int n_per_config);
/// gen_xor(n) with the truth for its four missing cells.
TaskSplit xor_task(int n_per_config);

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  int cells_removed_per_test_row = 1;
};

/// round(test_fraction * N) rows are chosen uniformly without replacement;
/// in each, cells_removed_per_test_row of its observed cells (or all of them
/// if fewer) are hidden, chosen uniformly.
TaskSplit make_split(const CategoricalDataset& data, const SplitSpec& spec);

}  // namespace clgp::data
