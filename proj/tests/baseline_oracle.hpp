#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <boost/rational.hpp>

#include "clgp/baselines.hpp"

// Brute-force counting straight from the rows, in exact rational arithmetic.
namespace clgp::oracle {

using Rational = boost::rational<std::int64_t>;

inline std::vector<Rational> dirichlet_unigram(const CategoricalDataset& data, int d, Rational alpha) {
  const int K = data.categories(d);
  std::vector<std::int64_t> c(K, 0);
  std::int64_t total = 0;
  for (int n = 0; n < data.rows(); ++n) {
    if (data.missing(n, d)) continue;
    ++c[data.at(n, d)];
    ++total;
  }
  std::vector<Rational> p;
  for (int k = 0; k < K; ++k) p.push_back((Rational(c[k]) + alpha) / (Rational(total) + alpha * Rational(K)));
  return p;
}

inline std::vector<Rational> dirichlet_bigram(const CategoricalDataset& data, int d, int v, Rational alpha) {
  if (d == 0 || v == kMissing) return dirichlet_unigram(data, d, alpha);
  const int K = data.categories(d);
  std::vector<std::int64_t> c(K, 0);
  std::int64_t total = 0;
  for (int n = 0; n < data.rows(); ++n) {
    if (data.missing(n, d) || data.at(n, d - 1) != v) continue;
    ++c[data.at(n, d)];
    ++total;
  }
  std::vector<Rational> p;
  for (int k = 0; k < K; ++k) p.push_back((Rational(c[k]) + alpha) / (Rational(total) + alpha * Rational(K)));
  return p;
}

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// Small dataset with a few missing cells and, sometimes, a never-seen category.
inline CategoricalDataset random_dataset(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(2, 4), nn(3, 25), nk(1, 5);
  const int D = nd(rng), N = nn(rng);
  std::vector<int> cards;
  for (int d = 0; d < D; ++d) cards.push_back(nk(rng));
  CategoricalDataset data(N, cards);
  std::bernoulli_distribution miss(0.15);
  for (int n = 0; n < N; ++n) {
    for (int d = 0; d < D; ++d) {
      std::uniform_int_distribution<int> val(0, std::max(0, cards[d] - 1));
      data.set(n, d, miss(rng) ? kMissing : val(rng));
    }
  }
  return data;
}

}  // namespace clgp::oracle
