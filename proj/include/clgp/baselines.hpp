#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "clgp/dataset.hpp"
#include "clgp/model.hpp"

namespace clgp::baselines {

class EmptyCounts : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Category counts over the observed cells of a dataset. bigram[d][v][k]
/// counts rows with variable d - 1 equal to v and variable d equal to k;
/// bigram[0] is empty.
struct CountTable {
  std::vector<int> cardinalities;
  std::vector<std::vector<std::int64_t>> unigram;
  std::vector<std::vector<std::vector<std::int64_t>>> bigram;

  std::int64_t total(int d) const;
};

CountTable build_counts(const CategoricalDataset& data);

std::vector<double> uniform_predict(int cardinality);
/// count_k / total. Throws EmptyCounts when variable d has no observations.
std::vector<double> multinomial_predict(const CountTable& counts, int d);
/// (count_k + alpha) / (total + alpha (K_d + 1)).
std::vector<double> dirichlet_multinomial_predict(const CountTable& counts, int d, double alpha);

struct BigramPrediction {
  std::vector<double> probs;
  bool fell_back = false;  // d == 0 or the conditioning value was missing
};

/// Add-alpha conditional frequency of variable d given variable d - 1 taking
/// `conditioning`. Falls back to the unigram estimate when d == 0 or
/// conditioning == kMissing.
BigramPrediction bigram_dirichlet_predict(const CountTable& counts, int d, int conditioning,
                                          double alpha);

enum class Baseline { Uniform, Multinomial, DirichletUnigram, DirichletBigram };

struct BaselineResult {
  PredictiveTable table;
  int fallbacks = 0;
};

/// Fits counts on the observed cells of `visible` and predicts every target.
BaselineResult predict_baseline(Baseline kind, const CategoricalDataset& visible,
                                const std::vector<CellRef>& targets, double alpha);

}  // namespace clgp::baselines
