#include "clgp/baselines.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>

namespace clgp::baselines {

namespace {

struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool exact = false;
};

// Small-denominator fraction equal to alpha to within a few ulps, so that
// smoothed frequencies become one correctly rounded integer division.
Ratio as_ratio(double alpha) {
  double x = alpha;
  std::int64_t h0 = 1, h1 = 0, k0 = 0, k1 = 1;
  for (int i = 0; i < 40; ++i) {
    const double a = std::floor(x);
    if (a > 1e9) break;
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h = ai * h0 + h1;
    const std::int64_t k = ai * k0 + k1;
    if (k > 1'000'000) break;
    h1 = h0;
    h0 = h;
    k1 = k0;
    k0 = k;
    if (std::abs(static_cast<double>(h) / static_cast<double>(k) - alpha) <= 4e-16 * alpha) {
      return {h, k, true};
    }
    const double frac = x - a;
    if (frac <= 0.0) break;
    x = 1.0 / frac;
  }
  return {};
}

void check_variable(const CountTable& counts, int d) {
  if (d < 0 || d >= static_cast<int>(counts.unigram.size())) {
    throw std::out_of_range("variable " + std::to_string(d) + " out of range");
  }
}

std::vector<double> smooth(const std::vector<std::int64_t>& c, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("Dirichlet concentration must be positive and finite");
  }
  const std::int64_t total = std::accumulate(c.begin(), c.end(), std::int64_t{0});
  const auto categories = static_cast<std::int64_t>(c.size());
  std::vector<double> out(c.size());
  const Ratio r = as_ratio(alpha);
  // Exact integer numerators and denominators while they stay below 2^53.
  const double limit = 9007199254740992.0;
  if (r.exact && (static_cast<double>(total) * r.den + static_cast<double>(r.num) * categories) < limit) {
    const std::int64_t den = total * r.den + r.num * categories;
    for (std::size_t k = 0; k < c.size(); ++k) {
      out[k] = static_cast<double>(c[k] * r.den + r.num) / static_cast<double>(den);
    }
  } else {
    const double den = static_cast<double>(total) + alpha * static_cast<double>(categories);
    for (std::size_t k = 0; k < c.size(); ++k) out[k] = (static_cast<double>(c[k]) + alpha) / den;
  }
  return out;
}

}  // namespace

std::int64_t CountTable::total(int d) const {
  return std::accumulate(unigram.at(d).begin(), unigram.at(d).end(), std::int64_t{0});
}

CountTable build_counts(const CategoricalDataset& data) {
  CountTable t;
  const int D = data.variables();
  t.cardinalities = data.cardinalities();
  t.unigram.resize(D);
  t.bigram.resize(D);
  for (int d = 0; d < D; ++d) {
    t.unigram[d].assign(data.categories(d), 0);
    if (d > 0) {
      t.bigram[d].assign(data.categories(d - 1), std::vector<std::int64_t>(data.categories(d), 0));
    }
  }
  for (int n = 0; n < data.rows(); ++n) {
    for (int d = 0; d < D; ++d) {
      if (data.missing(n, d)) continue;
      const int v = data.at(n, d);
      ++t.unigram[d][v];
      if (d > 0 && !data.missing(n, d - 1)) ++t.bigram[d][data.at(n, d - 1)][v];
    }
  }
  return t;
}

std::vector<double> uniform_predict(int cardinality) {
  if (cardinality < 0) throw std::invalid_argument("cardinality must be nonnegative");
  return std::vector<double>(static_cast<std::size_t>(cardinality) + 1,
                             1.0 / static_cast<double>(cardinality + 1));
}

std::vector<double> multinomial_predict(const CountTable& counts, int d) {
  check_variable(counts, d);
  const std::int64_t total = counts.total(d);
  if (total == 0) {
    throw EmptyCounts("variable " + std::to_string(d) + " has no observed values");
  }
  std::vector<double> out;
  for (auto c : counts.unigram[d]) out.push_back(static_cast<double>(c) / static_cast<double>(total));
  return out;
}

std::vector<double> dirichlet_multinomial_predict(const CountTable& counts, int d, double alpha) {
  check_variable(counts, d);
  return smooth(counts.unigram[d], alpha);
}

BigramPrediction bigram_dirichlet_predict(const CountTable& counts, int d, int conditioning,
                                          double alpha) {
  check_variable(counts, d);
  if (d == 0 || conditioning == kMissing) {
    return {smooth(counts.unigram[d], alpha), true};
  }
  if (conditioning < 0 || conditioning >= static_cast<int>(counts.bigram[d].size())) {
    throw std::out_of_range("conditioning value " + std::to_string(conditioning) +
                            " out of range for variable " + std::to_string(d - 1));
  }
  return {smooth(counts.bigram[d][conditioning], alpha), false};
}

BaselineResult predict_baseline(Baseline kind, const CategoricalDataset& visible,
                                const std::vector<CellRef>& targets, double alpha) {
  const CountTable counts = build_counts(visible);
  BaselineResult out;
  out.table.entries.reserve(targets.size());
  for (const auto& [n, d] : targets) {
    if (n < 0 || n >= visible.rows() || d < 0 || d >= visible.variables()) {
      throw UnknownRow("target (" + std::to_string(n) + ", " + std::to_string(d) +
                       ") is outside the dataset");
    }
    PredictiveEntry e{n, d, {}};
    switch (kind) {
      case Baseline::Uniform:
        e.probs = uniform_predict(visible.cardinality(d));
        break;
      case Baseline::Multinomial:
        e.probs = multinomial_predict(counts, d);
        break;
      case Baseline::DirichletUnigram:
        e.probs = dirichlet_multinomial_predict(counts, d, alpha);
        break;
      case Baseline::DirichletBigram: {
        auto b = bigram_dirichlet_predict(counts, d, d > 0 ? visible.at(n, d - 1) : kMissing, alpha);
        out.fallbacks += b.fell_back ? 1 : 0;
        e.probs = std::move(b.probs);
        break;
      }
    }
    out.table.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace clgp::baselines
