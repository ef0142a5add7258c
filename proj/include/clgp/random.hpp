#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

#include "clgp/linalg.hpp"

namespace clgp {

/// splitmix64 finalizer; gives independent-looking seeds for numbered streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Boost's ziggurat normal is fast and produces the same stream on every
// standard library, unlike std::normal_distribution.
template <class Engine>
double standard_normal(Engine& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

template <class Engine>
void fill_standard_normal(Matrix& out, Engine& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  double* p = out.data();
  for (Eigen::Index i = 0; i < out.size(); ++i) p[i] = dist(rng);
}

template <class Engine>
Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Engine& rng) {
  Matrix out(rows, cols);
  fill_standard_normal(out, rng);
  return out;
}

}  // namespace clgp
