#include "clgp/eval.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"

#include "clgp/random.hpp"

namespace clgp::eval {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::json number_or_tag(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

PerplexityResult perplexity(const PredictiveTable& predictions, const data::AnswerKey& key) {
  std::map<std::pair<int, int>, const PredictiveEntry*> index;
  for (const auto& e : predictions.entries) index[{e.row, e.variable}] = &e;

  PerplexityResult r;
  r.n_cells = static_cast<int>(key.cells.size());
  if (key.cells.empty()) throw MissingPrediction("answer key is empty");
  double sum = 0.0;
  for (const auto& c : key.cells) {
    const auto it = index.find({c.row, c.variable});
    if (it == index.end()) {
      throw MissingPrediction("no prediction for cell (" + std::to_string(c.row) + ", " +
                              std::to_string(c.variable) + ")");
    }
    const auto& probs = it->second->probs;
    if (c.value < 0 || c.value >= static_cast<int>(probs.size())) {
      throw MissingPrediction("true value " + std::to_string(c.value) + " of cell (" +
                              std::to_string(c.row) + ", " + std::to_string(c.variable) +
                              ") is outside its " + std::to_string(probs.size()) +
                              "-entry prediction");
    }
    const double p = probs[c.value];
    const double lp = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    r.per_cell_logprobs.push_back(lp);
    if (p > 0.0) sum += lp;
    else r.infinite = true;
  }
  r.perplexity = r.infinite ? std::numeric_limits<double>::infinity()
                            : std::exp(-sum / static_cast<double>(r.n_cells));
  return r;
}

const char* choice_name(ModelChoice m) {
  switch (m) {
    case ModelChoice::Clgp: return "clgp";
    case ModelChoice::Lgm: return "lgm";
    case ModelChoice::Uniform: return "uniform";
    case ModelChoice::Multinomial: return "multinomial";
    case ModelChoice::DirichletUnigram: return "dir-mult-uni";
    case ModelChoice::DirichletBigram: return "dir-mult-bi";
  }
  return "?";
}

ModelChoice parse_choice(const std::string& name) {
  for (auto m : {ModelChoice::Clgp, ModelChoice::Lgm, ModelChoice::Uniform,
                 ModelChoice::Multinomial, ModelChoice::DirichletUnigram,
                 ModelChoice::DirichletBigram}) {
    if (name == choice_name(m)) return m;
  }
  throw std::invalid_argument("unknown model '" + name + "'");
}

bool is_gp(ModelChoice m) { return m == ModelChoice::Clgp || m == ModelChoice::Lgm; }

double ModelSpec::effective_alpha() const {
  if (alpha) return *alpha;
  return model == ModelChoice::DirichletBigram ? kDefaultBigramAlpha : kDefaultUnigramAlpha;
}

void ExperimentReport::summarize() {
  failures = 0;
  std::vector<double> ok;
  bool inf = false;
  for (const auto& r : repetitions) {
    if (!r.ok) {
      ++failures;
      continue;
    }
    if (r.result.infinite) inf = true;
    else ok.push_back(r.result.perplexity);
  }
  if (inf) {
    mean = std::numeric_limits<double>::infinity();
    std = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  if (ok.empty()) {
    mean = std = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  double s = 0.0;
  for (double v : ok) s += v;
  mean = s / static_cast<double>(ok.size());
  double ss = 0.0;
  for (double v : ok) ss += (v - mean) * (v - mean);
  std = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
}

FitOutcome fit_and_predict(const ModelSpec& spec, const data::TaskSplit& task,
                           std::uint64_t seed, Execution exec) {
  std::vector<CellRef> targets;
  targets.reserve(task.answers.cells.size());
  for (const auto& c : task.answers.cells) targets.push_back({c.row, c.variable});

  FitOutcome out;
  if (is_gp(spec.model)) {
    TrainConfig config = spec.train;
    config.seed = seed;
    config.model = spec.model == ModelChoice::Clgp ? ModelKind::Clgp : ModelKind::Lgm;
    TrainResult trained = train(task.visible, config, {}, exec);
    out.table = predictive_probs(trained.state, task.visible, targets, spec.predictive_samples,
                                 derive_seed(seed, 1), exec);
    out.state = std::move(trained.state);
    out.trace = std::move(trained.trace);
    return out;
  }
  baselines::Baseline kind = baselines::Baseline::Uniform;
  switch (spec.model) {
    case ModelChoice::Multinomial: kind = baselines::Baseline::Multinomial; break;
    case ModelChoice::DirichletUnigram: kind = baselines::Baseline::DirichletUnigram; break;
    case ModelChoice::DirichletBigram: kind = baselines::Baseline::DirichletBigram; break;
    default: break;
  }
  auto res = baselines::predict_baseline(kind, task.visible, targets, spec.effective_alpha());
  out.table = std::move(res.table);
  out.fallbacks = res.fallbacks;
  return out;
}

ExperimentReport run_experiment(const ModelSpec& spec, const data::TaskSplit& task,
                                int repetitions, std::uint64_t seed, Execution exec) {
  if (repetitions < 1) throw std::invalid_argument("run_experiment: repetitions must be >= 1");
  ExperimentReport report;
  report.model = choice_name(spec.model);
  report.config_hash = config_hash(spec, "");
  for (int r = 0; r < repetitions; ++r) {
    RepetitionOutcome o;
    o.repetition = r;
    o.seed = seed + static_cast<std::uint64_t>(r);
    try {
      FitOutcome fit = fit_and_predict(spec, task, o.seed, exec);
      o.result = perplexity(fit.table, task.answers);
      o.fallbacks = fit.fallbacks;
      if (fit.trace && !fit.trace->iterations.empty()) o.final_elbo = fit.trace->iterations.back().elbo;
      o.ok = true;
    } catch (const TrainingDiverged& e) {
      o.error = e.what();
      o.failed_iteration = e.iteration();
    } catch (const MissingPrediction&) {
      throw;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    report.repetitions.push_back(std::move(o));
  }
  report.summarize();
  return report;
}

std::vector<SplitReport> run_split_experiments(const ModelSpec& spec,
                                               const CategoricalDataset& data,
                                               const data::SplitSpec& split, int splits,
                                               int repetitions, std::uint64_t seed,
                                               Execution exec) {
  if (splits < 1) throw std::invalid_argument("run_split_experiments: splits must be >= 1");
  std::vector<SplitReport> out;
  for (int s = 0; s < splits; ++s) {
    data::SplitSpec sp = split;
    sp.seed = split.seed + static_cast<std::uint64_t>(s);
    const data::TaskSplit task = data::make_split(data, sp);
    SplitReport sr{s, sp.seed, static_cast<int>(task.test_rows.size()),
                   run_experiment(spec, task, repetitions, seed, exec)};
    out.push_back(std::move(sr));
  }
  return out;
}

std::string config_hash(const ModelSpec& spec, const std::string& context) {
  std::ostringstream c;
  const TrainConfig& t = spec.train;
  c << "model=" << choice_name(spec.model) << ";samples=" << spec.predictive_samples;
  if (is_gp(spec.model)) {
    c << ";Q=" << t.latent_dim << ";M=" << t.inducing << ";T=" << t.mc_samples
      << ";iters=" << t.iterations << ";alt=" << t.alternating
      << ";hyp=" << t.optimize_hyperparams << ";bias=" << t.linear_bias
      << ";sigma_x=" << shortest(t.sigma_x) << ";init=" << shortest(t.init.latent_std) << ','
      << shortest(t.init.lengthscale) << ',' << shortest(t.init.mu_std) << ','
      << shortest(t.init.inducing_std) << ',' << shortest(t.init.signal_variance) << ','
      << shortest(t.init.bias_variance) << ";rmsprop=" << shortest(t.rmsprop.rho) << ','
      << shortest(t.rmsprop.learning_rate) << ',' << shortest(t.rmsprop.epsilon) << ','
      << shortest(t.rmsprop.decay_factor) << ',' << t.rmsprop.decay_every;
  } else if (spec.model == ModelChoice::DirichletUnigram ||
             spec.model == ModelChoice::DirichletBigram) {
    c << ";alpha=" << shortest(spec.effective_alpha());
  }
  c << ';' << context;
  const std::string s = c.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string report_json(const std::vector<SplitReport>& splits, const std::string& model,
                        const std::string& hash) {
  nlohmann::ordered_json doc;
  doc["format"] = "clgp-experiment-report";
  doc["version"] = 1;
  doc["model"] = model;
  doc["config_hash"] = hash;
  doc["splits"] = nlohmann::ordered_json::array();
  for (const auto& s : splits) {
    nlohmann::ordered_json js;
    js["split"] = s.split;
    js["split_seed"] = s.split_seed;
    js["test_rows"] = s.test_rows;
    js["mean"] = number_or_tag(s.report.mean);
    js["std"] = number_or_tag(s.report.std);
    js["failures"] = s.report.failures;
    js["repetitions"] = nlohmann::ordered_json::array();
    for (const auto& r : s.report.repetitions) {
      nlohmann::ordered_json jr;
      jr["repetition"] = r.repetition;
      jr["seed"] = r.seed;
      jr["ok"] = r.ok;
      if (r.ok) {
        jr["perplexity"] = number_or_tag(r.result.perplexity);
        jr["cells"] = r.result.n_cells;
        if (!std::isnan(r.final_elbo)) jr["final_elbo"] = r.final_elbo;
        if (r.fallbacks) jr["bigram_fallbacks"] = r.fallbacks;
      } else {
        jr["error"] = r.error;
        if (r.failed_iteration >= 0) jr["failed_iteration"] = r.failed_iteration;
      }
      js["repetitions"].push_back(std::move(jr));
    }
    doc["splits"].push_back(std::move(js));
  }
  return doc.dump(2) + "\n";
}

void export_latents(std::ostream& out, const VariationalState& state) {
  const auto& p = state.params;
  const int Q = p.latent_dim();
  out << "row";
  for (int q = 0; q < Q; ++q) out << ",m_" << q;
  for (int q = 0; q < Q; ++q) out << ",s_" << q;
  out << '\n';
  for (int n = 0; n < p.rows(); ++n) {
    out << n;
    for (int q = 0; q < Q; ++q) out << ',' << shortest(p.m(n, q));
    for (int q = 0; q < Q; ++q) out << ',' << shortest(std::exp(p.log_s(n, q)));
    out << '\n';
  }
}

LatentTable parse_latents(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw data::ParseError("empty latent table", 1, 1);
  int cols = 1;
  for (char ch : line) cols += ch == ',';
  if (cols < 3 || (cols - 1) % 2 != 0) throw data::ParseError("bad latent header", 1, 1);
  const int Q = (cols - 1) / 2;
  std::vector<std::vector<double>> rows;
  LatentTable t;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::size_t start = 0;
    int field = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string f = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      ++field;
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw data::ParseError("bad number '" + f + "'", line_no, field);
      }
      vals.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(vals.size()) != cols) {
      throw data::ParseError("wrong field count", line_no, static_cast<int>(vals.size()));
    }
    t.rows.push_back(static_cast<int>(vals[0]));
    rows.push_back(std::move(vals));
  }
  t.m.resize(static_cast<Eigen::Index>(rows.size()), Q);
  t.s.resize(static_cast<Eigen::Index>(rows.size()), Q);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int q = 0; q < Q; ++q) {
      t.m(static_cast<Eigen::Index>(i), q) = rows[i][1 + q];
      t.s(static_cast<Eigen::Index>(i), q) = rows[i][1 + Q + q];
    }
  }
  return t;
}

void export_trace(std::ostream& out, const TrainingTrace& trace) {
  for (const auto& a : trace.assumptions) out << "# " << a << '\n';
  out << "iteration,elbo,kl_x,kl_u,mean_loglik,mc_std\n";
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const auto& r = trace.iterations[i];
    out << i << ',' << shortest(r.elbo) << ',' << shortest(r.kl_x) << ',' << shortest(r.kl_u)
        << ',' << shortest(r.mean_loglik()) << ',' << shortest(r.mc_std) << '\n';
  }
}

double train_perplexity(const ElboReport& report, const CategoricalDataset& data) {
  const int cells = data.observed_count();
  if (cells == 0) throw std::invalid_argument("train_perplexity: no observed cells");
  return std::exp(-report.mean_loglik() / cells);
}

}  // namespace clgp::eval
