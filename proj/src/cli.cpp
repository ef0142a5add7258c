#include "clgp/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "clgp/checkpoint.hpp"
#include "clgp/data.hpp"
#include "clgp/eval.hpp"
#include "clgp/optimizer.hpp"
#include "clgp/pcfg.hpp"
#include "clgp/random.hpp"

namespace clgp::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainFlags {
  std::string model = "clgp";
  int latent_dim = 2;
  int inducing = 50;
  int mc_samples = 20;
  int iters = 500;
  double learning_rate = RmsPropConfig{}.learning_rate;
  bool fix_hypers = false;
  bool no_bias = false;
  bool serial = false;
  int log_every = 50;

  void attach(CLI::App& app) {
    app.add_option("--latent-dim", latent_dim, "Latent dimensionality Q")->capture_default_str();
    app.add_option("--inducing", inducing, "Inducing points M")->capture_default_str();
    app.add_option("--mc-samples", mc_samples, "Monte Carlo samples T")->capture_default_str();
    app.add_option("--iters", iters, "RMSPROP iterations")->capture_default_str();
    app.add_option("--lr", learning_rate, "Initial RMSPROP learning rate")->capture_default_str();
    app.add_flag("--fix-hypers", fix_hypers, "Keep kernel hyperparameters at their initial values");
    app.add_flag("--no-bias", no_bias, "Linear kernel without a bias variance");
    app.add_flag("--serial", serial, "Disable OpenMP parallelism");
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig c;
    c.latent_dim = latent_dim;
    c.inducing = inducing;
    c.mc_samples = mc_samples;
    c.iterations = iters;
    c.seed = seed;
    c.optimize_hyperparams = !fix_hypers;
    c.linear_bias = !no_bias;
    c.rmsprop.learning_rate = learning_rate;
    if (model == "lgm") c.model = ModelKind::Lgm;
    else if (model == "clgp") c.model = ModelKind::Clgp;
    else throw UsageError("--model must be clgp or lgm for this command");
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }

  Execution exec() const { return serial ? Execution::Serial : Execution::Parallel; }
};

std::string fmt(double v, int precision = 6) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string dataset_text(const CategoricalDataset& d) {
  std::ostringstream s;
  data::write_dataset(s, d);
  return s.str();
}

// Cells of `key` must be hidden in `visible` and within its bounds.
void check_alignment(const data::AnswerKey& key, const CategoricalDataset& visible) {
  for (const auto& c : key.cells) {
    if (c.row >= visible.rows() || c.variable >= visible.variables()) {
      throw eval::MissingPrediction("answer cell (" + std::to_string(c.row) + ", " +
                                    std::to_string(c.variable) + ") is outside the dataset");
    }
    if (!visible.missing(c.row, c.variable)) {
      throw eval::MissingPrediction("answer cell (" + std::to_string(c.row) + ", " +
                                    std::to_string(c.variable) + ") is observed in the data");
    }
    if (c.value > visible.cardinality(c.variable)) {
      throw eval::MissingPrediction("answer value " + std::to_string(c.value) + " for cell (" +
                                    std::to_string(c.row) + ", " + std::to_string(c.variable) +
                                    ") exceeds the variable's cardinality");
    }
  }
}

void check_checkpoint_matches(const Checkpoint& cp, const CategoricalDataset& d) {
  if (d.rows() > cp.state.params.rows()) {
    throw UnknownRow("dataset has " + std::to_string(d.rows()) + " rows but the checkpoint was trained on " +
                     std::to_string(cp.state.params.rows()));
  }
  if (cp.cardinalities != d.cardinalities()) {
    throw UsageError("dataset variables or cardinalities differ from the checkpoint's");
  }
  if (d.rows() < cp.state.params.rows()) {
    throw UsageError("dataset has fewer rows than the checkpoint was trained on");
  }
}

std::string predictions_csv(const PredictiveTable& table, const CategoricalDataset& d) {
  int width = 0;
  for (int v = 0; v < d.variables(); ++v) width = std::max(width, d.categories(v));
  std::ostringstream s;
  s << "row,variable";
  for (int k = 0; k < width; ++k) s << ",p_" << k;
  s << '\n';
  s << std::setprecision(17);
  for (const auto& e : table.entries) {
    s << e.row << ',' << e.variable;
    for (int k = 0; k < width; ++k) {
      s << ',';
      if (k < static_cast<int>(e.probs.size())) s << e.probs[k];
    }
    s << '\n';
  }
  return s.str();
}

int cmd_gen_xor(int n, const std::string& out_path, const std::string& answers_path,
                std::ostream& out) {
  const auto task = data::xor_task(n);
  write_file(out_path, dataset_text(task.visible));
  if (!answers_path.empty()) {
    std::ostringstream s;
    data::write_answers(s, task.answers);
    write_file(answers_path, s.str());
  }
  out << "wrote " << out_path << ": " << task.visible.rows() << " rows, "
      << task.visible.variables() << " variables, " << task.visible.missing_count()
      << " missing cells\n";
  return kOk;
}

int cmd_gen_pcfg(int strings, std::uint64_t seed, const std::string& grammar_path,
                 const std::string& out_path, std::ostream& out) {
  const auto grammar = grammar_path.empty() ? data::default_grammar() : data::load_grammar(grammar_path);
  const auto d = data::gen_pcfg_triplets(grammar, strings, seed);
  write_file(out_path, dataset_text(d));
  out << "wrote " << out_path << ": " << d.rows() << " triplets from " << strings
      << " strings, alphabet of " << d.categories(0) << " symbols\n";
  return kOk;
}

int cmd_train(const std::string& data_path, const TrainFlags& flags, std::uint64_t seed,
              const std::string& out_dir, std::ostream& out) {
  const TrainConfig config = flags.config(seed);
  const auto d = data::load_dataset(data_path);
  TrainCallbacks cb;
  if (flags.log_every > 0) {
    cb.on_iteration = [&](int it, const ElboReport& r) {
      if (it % flags.log_every == 0 || it + 1 == config.iterations) {
        out << "iter " << it << " elbo " << fmt(r.elbo, 8) << " kl_x " << fmt(r.kl_x)
            << " kl_u " << fmt(r.kl_u) << " mc_std " << fmt(r.mc_std) << '\n';
      }
    };
  }
  const TrainResult res = train(d, config, cb, flags.exec());
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  save_checkpoint(dir / "checkpoint.json", res.state, d);
  std::ostringstream trace, latents;
  eval::export_trace(trace, res.trace);
  write_file(dir / "trace.csv", trace.str());
  eval::export_latents(latents, res.state);
  write_file(dir / "latents.csv", latents.str());
  if (res.trace.iterations.empty()) {
    out << "no iterations run; checkpoint holds the initial state\n";
  } else {
    const auto& last = res.trace.iterations.back();
    out << "final elbo " << fmt(last.elbo, 10) << " (train perplexity "
        << fmt(eval::train_perplexity(last, d)) << ")\n";
  }
  out << "wrote " << (dir / "checkpoint.json").string() << ", trace.csv, latents.csv\n";
  return kOk;
}

int cmd_impute(const std::string& checkpoint_path, const std::string& data_path, int samples,
               std::uint64_t seed, bool serial, const std::string& out_path, std::ostream& out) {
  const auto d = data::load_dataset(data_path);
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  check_checkpoint_matches(cp, d);
  const auto targets = missing_cells(d);
  const auto table = predictive_probs(cp.state, d, targets, samples, seed,
                                      serial ? Execution::Serial : Execution::Parallel);
  write_file(out_path, predictions_csv(table, d));
  out << "imputed " << table.entries.size() << " cells into " << out_path << '\n';
  return kOk;
}

struct EvalArgs {
  std::string data_path;
  std::string answers_path;
  std::string checkpoint_path;
  std::string out_path;
  double test_fraction = 0.2;
  int splits = 1;
  int reps = 1;
  int cells_per_row = 1;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  int samples = kDefaultPredictiveSamples;
};

int cmd_eval(const EvalArgs& a, TrainFlags flags, std::ostream& out) {
  eval::ModelSpec spec;
  try {
    spec.model = eval::parse_choice(flags.model);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  spec.alpha = a.alpha;
  spec.predictive_samples = a.samples;
  if (a.alpha && !(*a.alpha > 0.0)) throw UsageError("--alpha must be positive");
  if (eval::is_gp(spec.model)) spec.train = flags.config(a.seed);
  if (!a.checkpoint_path.empty() && !eval::is_gp(spec.model)) {
    throw UsageError("--checkpoint only applies to clgp and lgm");
  }
  const auto d = data::load_dataset(a.data_path);

  std::vector<eval::SplitReport> reports;
  std::string context;
  if (!a.answers_path.empty()) {
    data::TaskSplit task{d, data::load_answers(a.answers_path), {}};
    check_alignment(task.answers, task.visible);
    context = "answers";
    if (!a.checkpoint_path.empty()) {
      const Checkpoint cp = load_checkpoint(a.checkpoint_path);
      check_checkpoint_matches(cp, d);
      std::vector<CellRef> targets;
      for (const auto& c : task.answers.cells) targets.push_back({c.row, c.variable});
      eval::ExperimentReport r;
      r.model = eval::choice_name(spec.model);
      eval::RepetitionOutcome o;
      o.seed = a.seed;
      o.result = eval::perplexity(
          predictive_probs(cp.state, d, targets, spec.predictive_samples, derive_seed(a.seed, 1),
                           flags.exec()),
          task.answers);
      o.ok = true;
      r.repetitions.push_back(o);
      r.summarize();
      context += ";checkpoint";
      reports.push_back({0, 0, 0, std::move(r)});
    } else {
      reports.push_back({0, 0, 0, eval::run_experiment(spec, task, a.reps, a.seed, flags.exec())});
    }
  } else {
    if (!a.checkpoint_path.empty()) {
      throw UsageError("--checkpoint needs --answers; random splits retrain per split");
    }
    data::SplitSpec split{a.test_fraction, a.split_seed, a.cells_per_row};
    try {
      reports = eval::run_split_experiments(spec, d, split, a.splits, a.reps, a.seed, flags.exec());
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    std::ostringstream c;
    c << "split:" << a.test_fraction << ',' << a.split_seed << ',' << a.cells_per_row << ','
      << a.splits;
    context = c.str();
  }
  std::ostringstream c;
  c << context << ";reps=" << a.reps << ";seed=" << a.seed << ";data=" << d.rows() << 'x'
    << d.variables();
  const std::string hash = eval::config_hash(spec, c.str());
  for (auto& r : reports) r.report.config_hash = hash;

  for (const auto& r : reports) {
    out << eval::choice_name(spec.model) << " split " << r.split << ": perplexity "
        << fmt(r.report.mean) << " +- " << fmt(r.report.std) << " over "
        << r.report.repetitions.size() - r.report.failures << " repetition(s)";
    if (r.report.failures) out << ", " << r.report.failures << " failed";
    out << '\n';
    for (const auto& rep : r.report.repetitions) {
      if (!rep.ok) out << "  repetition " << rep.repetition << " failed: " << rep.error << '\n';
    }
  }
  out << "config hash " << hash << '\n';
  if (!a.out_path.empty()) {
    write_file(a.out_path, eval::report_json(reports, eval::choice_name(spec.model), hash));
    out << "wrote " << a.out_path << '\n';
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Categorical latent Gaussian process: generate, train, impute, evaluate"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen->require_subcommand(1);
  int xor_n = 25;
  std::string gen_out, answers_out;
  auto* gen_xor = gen->add_subcommand("xor", "XOR triplets plus four partially observed rows");
  gen_xor->add_option("--n", xor_n, "Copies of each XOR triplet")->capture_default_str();
  gen_xor->add_option("--out", gen_out, "Dataset file")->required();
  gen_xor->add_option("--answers-out", answers_out, "Answer key for the missing cells");
  int pcfg_strings = 1000;
  std::uint64_t pcfg_seed = 0;
  std::string grammar_path;
  auto* gen_pcfg = gen->add_subcommand("pcfg", "Triplets of strings sampled from a PCFG");
  gen_pcfg->add_option("--strings", pcfg_strings, "Strings to sample")->capture_default_str();
  gen_pcfg->add_option("--seed", pcfg_seed, "Sampler seed")->capture_default_str();
  gen_pcfg->add_option("--grammar", grammar_path, "Grammar file (default: built-in grammar)");
  gen_pcfg->add_option("--out", gen_out, "Dataset file")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit a CLGP or LGM and write checkpoint, trace and latents");
  std::string data_path, out_dir;
  std::uint64_t seed = 0;
  TrainFlags train_flags;
  train_cmd->add_option("--data", data_path, "Dataset file")->required();
  train_cmd->add_option("--model", train_flags.model, "clgp or lgm")->capture_default_str();
  train_cmd->add_option("--seed", seed, "Training seed")->capture_default_str();
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  train_cmd->add_option("--log-every", train_flags.log_every, "Progress line interval (0 = quiet)")
      ->capture_default_str();
  train_flags.attach(*train_cmd);

  // impute
  auto* impute = app.add_subcommand("impute", "Posterior predictive for every missing cell");
  std::string checkpoint_path, impute_out;
  int samples = kDefaultPredictiveSamples;
  bool impute_serial = false;
  impute->add_option("--checkpoint", checkpoint_path, "Checkpoint from train")->required();
  impute->add_option("--data", data_path, "Dataset the checkpoint was trained on")->required();
  impute->add_option("--samples", samples, "Monte Carlo samples per cell")->capture_default_str();
  impute->add_option("--seed", seed, "Sampling seed")->capture_default_str();
  impute->add_option("--out", impute_out, "Predictions file")->required();
  impute->add_flag("--serial", impute_serial, "Disable OpenMP parallelism");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Test-set perplexity of a model");
  EvalArgs ea;
  TrainFlags eval_flags;
  eval_cmd->add_option("--data", ea.data_path, "Dataset file")->required();
  eval_cmd->add_option("--model", eval_flags.model,
                       "clgp, lgm, uniform, multinomial, dir-mult-uni or dir-mult-bi")
      ->required();
  auto* answers_opt = eval_cmd->add_option("--answers", ea.answers_path,
                                           "Answer key for cells already missing in --data");
  eval_cmd->add_option("--test-fraction", ea.test_fraction, "Fraction of rows used as test rows")
      ->capture_default_str()
      ->excludes(answers_opt);
  eval_cmd->add_option("--splits", ea.splits, "Number of random splits")->capture_default_str()
      ->excludes(answers_opt);
  eval_cmd->add_option("--split-seed", ea.split_seed, "Seed of the first split")
      ->capture_default_str()
      ->excludes(answers_opt);
  eval_cmd->add_option("--cells-per-row", ea.cells_per_row, "Cells hidden per test row")
      ->capture_default_str()
      ->excludes(answers_opt);
  eval_cmd->add_option("--reps", ea.reps, "Repetitions per split")->capture_default_str();
  eval_cmd->add_option("--seed", ea.seed, "Base seed; repetition r uses seed + r")
      ->capture_default_str();
  eval_cmd->add_option("--alpha", ea.alpha, "Dirichlet concentration (default 0.01 unigram, 1 bigram)");
  eval_cmd->add_option("--checkpoint", ea.checkpoint_path, "Predict from a trained checkpoint");
  eval_cmd->add_option("--samples", ea.samples, "Predictive Monte Carlo samples")
      ->capture_default_str();
  eval_cmd->add_option("--out", ea.out_path, "Report file (JSON)");
  eval_flags.attach(*eval_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "clgp: " << e.what() << "\n";
    const auto* failed = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << "run 'clgp " << (failed == &app ? "" : failed->get_name() + " ") << "--help' for usage\n";
    return kBadArguments;
  }

  try {
    if (gen_xor->parsed()) return cmd_gen_xor(xor_n, gen_out, answers_out, out);
    if (gen_pcfg->parsed()) return cmd_gen_pcfg(pcfg_strings, pcfg_seed, grammar_path, gen_out, out);
    if (train_cmd->parsed()) return cmd_train(data_path, train_flags, seed, out_dir, out);
    if (impute->parsed()) {
      if (samples < 1) throw UsageError("--samples must be positive");
      return cmd_impute(checkpoint_path, data_path, samples, seed, impute_serial, impute_out, out);
    }
    if (eval_cmd->parsed()) {
      if (ea.reps < 1 || ea.splits < 1 || ea.samples < 1) {
        throw UsageError("--reps, --splits and --samples must be positive");
      }
      return cmd_eval(ea, eval_flags, out);
    }
  } catch (const UsageError& e) {
    err << "clgp: " << e.what() << '\n';
    return kBadArguments;
  } catch (const TrainingDiverged& e) {
    err << "clgp: training diverged at iteration " << e.iteration() << ": " << e.what() << '\n';
    return kDiverged;
  } catch (const eval::MissingPrediction& e) {
    err << "clgp: answer key and predictions misaligned: " << e.what() << '\n';
    return kMisaligned;
  } catch (const UnknownRow& e) {
    err << "clgp: " << e.what() << '\n';
    return kUnseenRows;
  } catch (const std::exception& e) {
    err << "clgp: " << e.what() << '\n';
    return kFailure;
  }
  return kBadArguments;
}

}  // namespace clgp::cli
