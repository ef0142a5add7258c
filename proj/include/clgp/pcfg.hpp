#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "clgp/data.hpp"
#include "clgp/dataset.hpp"

namespace clgp::data {

class DerivationDepthExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GrammarRule {
  std::string lhs;
  std::vector<std::string> rhs;
  double probability = 0.0;
};

/// A probabilistic context free grammar. Nonterminals are the symbols that
/// appear on some left-hand side; every other symbol is a terminal.
struct PcfgGrammar {
  std::string start;
  std::vector<GrammarRule> rules;

  std::vector<std::string> nonterminals() const;  // in first-appearance order
  std::vector<std::string> terminals() const;     // sorted
  /// Throws std::invalid_argument unless each nonterminal's probabilities
  /// sum to 1 within 1e-12, all are positive, and the start symbol has rules.
  void validate() const;
};

/// Parses lines of the form
///
///   beta -> B A [0.5] | C [0.5]
///
/// Alternatives may also be given on separate lines. '#' starts a comment.
/// The first left-hand side is the start symbol.
PcfgGrammar parse_grammar(std::istream& in);
PcfgGrammar parse_grammar(const std::string& text);
PcfgGrammar load_grammar(const std::filesystem::path& path);

/// alpha -> A beta; beta -> B A | C; A -> a | b | c; B -> d | e; C -> f | g.
PcfgGrammar default_grammar();

inline constexpr const char* kStartMarker = "s";
inline constexpr const char* kEndMarker = "s_end";

/// Category names in index order: the sorted terminals, then the start and
/// end markers. For the default grammar this is a..g = 0..6, s = 7, s_end = 8.
std::vector<std::string> symbol_alphabet(const PcfgGrammar& grammar);

/// Leftmost stochastic derivation from the start symbol.
std::vector<std::string> sample_string(const PcfgGrammar& grammar, std::mt19937_64& rng,
                                       int max_depth = 64);

/// Windows of three over s s <string> s_end s_end, encoded by `alphabet`.
std::vector<std::array<int, 3>> string_triplets(const std::vector<std::string>& string,
                                                const std::vector<std::string>& alphabet);

/// Triplets of n_strings sampled strings, one dataset row per triplet, all
/// three variables declared over the full alphabet.
CategoricalDataset gen_pcfg_triplets(const PcfgGrammar& grammar, int n_strings,
                                     std::uint64_t seed);

}  // namespace clgp::data
