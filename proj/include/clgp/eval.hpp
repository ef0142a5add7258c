#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clgp/baselines.hpp"
#include "clgp/data.hpp"
#include "clgp/model.hpp"
#include "clgp/optimizer.hpp"

namespace clgp::eval {

class MissingPrediction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PerplexityResult {
  double perplexity = 1.0;              // +inf when any true value got probability 0
  bool infinite = false;
  std::vector<double> per_cell_logprobs;  // in answer-key order
  int n_cells = 0;
};

/// exp(-mean log p(true value)). Every key cell needs an entry whose
/// probability vector covers the true value.
PerplexityResult perplexity(const PredictiveTable& predictions, const data::AnswerKey& key);

enum class ModelChoice { Clgp, Lgm, Uniform, Multinomial, DirichletUnigram, DirichletBigram };

const char* choice_name(ModelChoice m);
/// Accepts clgp, lgm, uniform, multinomial, dir-mult-uni, dir-mult-bi.
ModelChoice parse_choice(const std::string& name);
bool is_gp(ModelChoice m);

inline constexpr double kDefaultUnigramAlpha = 0.01;
inline constexpr double kDefaultBigramAlpha = 1.0;

struct ModelSpec {
  ModelChoice model = ModelChoice::Clgp;
  TrainConfig train;                  // GP models only; seed is set per repetition
  std::optional<double> alpha;        // Dirichlet models; per-model default when unset
  int predictive_samples = kDefaultPredictiveSamples;

  double effective_alpha() const;
};

struct RepetitionOutcome {
  int repetition = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  PerplexityResult result;
  std::string error;          // set when !ok
  int failed_iteration = -1;  // for diverged training
  double final_elbo = std::numeric_limits<double>::quiet_NaN();
  int fallbacks = 0;          // bigram unigram fallbacks
};

struct ExperimentReport {
  std::string model;
  std::string config_hash;
  std::vector<RepetitionOutcome> repetitions;
  double mean = 0.0;  // over successful repetitions; +inf if any is infinite
  double std = 0.0;   // sample standard deviation; NaN with an infinite member
  int failures = 0;

  void summarize();
};

struct FitOutcome {
  PredictiveTable table;
  std::optional<VariationalState> state;
  std::optional<TrainingTrace> trace;
  int fallbacks = 0;
};

/// Fits `spec` on task.visible with `seed` and predicts every answer-key cell.
FitOutcome fit_and_predict(const ModelSpec& spec, const data::TaskSplit& task,
                           std::uint64_t seed, Execution exec = Execution::Parallel);

/// Repetition r uses seed + r. Training failures are recorded per repetition.
ExperimentReport run_experiment(const ModelSpec& spec, const data::TaskSplit& task,
                                int repetitions, std::uint64_t seed,
                                Execution exec = Execution::Parallel);

struct SplitReport {
  int split = 0;
  std::uint64_t split_seed = 0;
  int test_rows = 0;
  ExperimentReport report;
};

/// Split s is make_split(data, {test_fraction, seed + s, cells_per_row}); each
/// split runs `repetitions` repetitions seeded from seed.
std::vector<SplitReport> run_split_experiments(const ModelSpec& spec,
                                               const CategoricalDataset& data,
                                               const data::SplitSpec& split, int splits,
                                               int repetitions, std::uint64_t seed,
                                               Execution exec = Execution::Parallel);

/// FNV-1a over a canonical rendering of the spec and any extra context.
std::string config_hash(const ModelSpec& spec, const std::string& context);

/// Machine-readable JSON document.
std::string report_json(const std::vector<SplitReport>& splits, const std::string& model,
                        const std::string& config_hash);

// --- Exports -------------------------------------------------------------

/// Columns: row, m_0..m_{Q-1}, s_0..s_{Q-1}; shortest round-trip decimals.
void export_latents(std::ostream& out, const VariationalState& state);

struct LatentTable {
  std::vector<int> rows;
  Matrix m;
  Matrix s;
};
LatentTable parse_latents(std::istream& in);

/// Assumption lines as '# ' comments, then
/// iteration, elbo, kl_x, kl_u, mean_loglik, mc_std.
void export_trace(std::ostream& out, const TrainingTrace& trace);

/// exp(-mean loglik per observed cell) of a training report.
double train_perplexity(const ElboReport& report, const CategoricalDataset& data);

}  // namespace clgp::eval
