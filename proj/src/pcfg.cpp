#include "clgp/pcfg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace clgp::data {

std::vector<std::string> PcfgGrammar::nonterminals() const {
  std::vector<std::string> out;
  for (const auto& r : rules) {
    if (std::find(out.begin(), out.end(), r.lhs) == out.end()) out.push_back(r.lhs);
  }
  return out;
}

std::vector<std::string> PcfgGrammar::terminals() const {
  const auto nts = nonterminals();
  std::set<std::string> out;
  for (const auto& r : rules) {
    for (const auto& s : r.rhs) {
      if (std::find(nts.begin(), nts.end(), s) == nts.end()) out.insert(s);
    }
  }
  return {out.begin(), out.end()};
}

void PcfgGrammar::validate() const {
  if (rules.empty()) throw std::invalid_argument("grammar has no rules");
  std::map<std::string, double> totals;
  for (const auto& r : rules) {
    if (!(r.probability > 0.0) || r.probability > 1.0) {
      throw std::invalid_argument("rule for '" + r.lhs + "' has probability outside (0, 1]");
    }
    if (r.rhs.empty()) throw std::invalid_argument("rule for '" + r.lhs + "' has an empty body");
    totals[r.lhs] += r.probability;
  }
  if (!totals.count(start)) throw std::invalid_argument("start symbol '" + start + "' has no rules");
  for (const auto& [lhs, total] : totals) {
    if (std::abs(total - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "probabilities for '" << lhs << "' sum to " << total;
      throw std::invalid_argument(msg.str());
    }
  }
  for (const auto& t : terminals()) {
    if (t == kStartMarker || t == kEndMarker) {
      throw std::invalid_argument("terminal '" + t + "' collides with a boundary marker");
    }
  }
}

PcfgGrammar parse_grammar(std::istream& in) {
  PcfgGrammar g;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw ParseError("grammar line " + std::to_string(line_no) + ": " + why, line_no, 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string lhs, arrow;
    if (!(tokens >> lhs)) continue;
    if (!(tokens >> arrow) || arrow != "->") fail("expected 'LHS -> RHS [prob]'");
    if (g.start.empty()) g.start = lhs;

    GrammarRule rule{lhs, {}, 0.0};
    std::string tok;
    bool have_prob = false;
    auto flush = [&] {
      if (rule.rhs.empty()) fail("empty alternative");
      if (!have_prob) fail("alternative without [probability]");
      g.rules.push_back(rule);
      rule.rhs.clear();
      have_prob = false;
    };
    while (tokens >> tok) {
      if (tok == "|") {
        flush();
      } else if (tok.front() == '[') {
        if (tok.back() != ']' || have_prob) fail("malformed probability '" + tok + "'");
        try {
          std::size_t used = 0;
          const std::string body = tok.substr(1, tok.size() - 2);
          rule.probability = std::stod(body, &used);
          if (used != body.size()) fail("malformed probability '" + tok + "'");
        } catch (const std::logic_error&) {
          fail("malformed probability '" + tok + "'");
        }
        have_prob = true;
      } else {
        if (have_prob) fail("symbol '" + tok + "' after probability; separate alternatives with '|'");
        rule.rhs.push_back(tok);
      }
    }
    flush();
  }
  g.validate();
  return g;
}

PcfgGrammar parse_grammar(const std::string& text) {
  std::istringstream in(text);
  return parse_grammar(in);
}

PcfgGrammar load_grammar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return parse_grammar(in);
}

PcfgGrammar default_grammar() {
  return parse_grammar(
      "alpha -> A beta [1.0]\n"
      "beta -> B A [0.5] | C [0.5]\n"
      "A -> a [0.5] | b [0.3] | c [0.2]\n"
      "B -> d [0.7] | e [0.3]\n"
      "C -> f [0.7] | g [0.3]\n");
}

std::vector<std::string> symbol_alphabet(const PcfgGrammar& grammar) {
  auto out = grammar.terminals();
  out.emplace_back(kStartMarker);
  out.emplace_back(kEndMarker);
  return out;
}

namespace {

void expand(const PcfgGrammar& g, const std::map<std::string, std::vector<std::size_t>>& by_lhs,
            const std::string& symbol, int depth, int max_depth, std::mt19937_64& rng,
            std::vector<std::string>& out) {
  const auto it = by_lhs.find(symbol);
  if (it == by_lhs.end()) {
    out.push_back(symbol);
    return;
  }
  if (depth >= max_depth) {
    throw DerivationDepthExceeded("derivation deeper than " + std::to_string(max_depth) +
                                  " at '" + symbol + "'");
  }
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto& alts = it->second;
  std::size_t pick = alts.back();
  double acc = 0.0;
  for (std::size_t a : alts) {
    acc += g.rules[a].probability;
    if (u < acc) {
      pick = a;
      break;
    }
  }
  for (const auto& s : g.rules[pick].rhs) expand(g, by_lhs, s, depth + 1, max_depth, rng, out);
}

}  // namespace

std::vector<std::string> sample_string(const PcfgGrammar& grammar, std::mt19937_64& rng,
                                       int max_depth) {
  std::map<std::string, std::vector<std::size_t>> by_lhs;
  for (std::size_t i = 0; i < grammar.rules.size(); ++i) by_lhs[grammar.rules[i].lhs].push_back(i);
  std::vector<std::string> out;
  expand(grammar, by_lhs, grammar.start, 0, max_depth, rng, out);
  return out;
}

std::vector<std::array<int, 3>> string_triplets(const std::vector<std::string>& string,
                                                const std::vector<std::string>& alphabet) {
  std::vector<int> codes;
  auto encode = [&](const std::string& s) {
    const auto it = std::find(alphabet.begin(), alphabet.end(), s);
    if (it == alphabet.end()) throw std::invalid_argument("symbol '" + s + "' not in alphabet");
    return static_cast<int>(it - alphabet.begin());
  };
  const int start = encode(kStartMarker);
  const int end = encode(kEndMarker);
  codes.push_back(start);
  codes.push_back(start);
  for (const auto& s : string) codes.push_back(encode(s));
  codes.push_back(end);
  codes.push_back(end);
  std::vector<std::array<int, 3>> out;
  for (std::size_t i = 0; i + 2 < codes.size(); ++i) out.push_back({codes[i], codes[i + 1], codes[i + 2]});
  return out;
}

CategoricalDataset gen_pcfg_triplets(const PcfgGrammar& grammar, int n_strings,
                                     std::uint64_t seed) {
  if (n_strings < 1) throw std::invalid_argument("gen_pcfg_triplets: need at least one string");
  grammar.validate();
  const auto alphabet = symbol_alphabet(grammar);
  const int K = static_cast<int>(alphabet.size()) - 1;
  CategoricalDataset out(0, {K, K, K}, {"first", "second", "third"});
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_strings; ++i) {
    for (const auto& t : string_triplets(sample_string(grammar, rng), alphabet)) {
      out.append_row({t[0], t[1], t[2]});
    }
  }
  return out;
}

}  // namespace clgp::data
