#include "clgp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace clgp::data {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool parse_int(std::string_view s, int& value) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool skippable(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

CategoricalDataset read_dataset(std::istream& in) {
  std::string line;
  int line_no = 0;
  std::vector<std::string> names;
  std::vector<int> declared;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto fields = split_fields(line);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      std::string_view f = fields[c];
      int k = -1;
      const std::size_t colon = f.rfind(':');
      if (colon != std::string_view::npos) {
        if (!parse_int(trim(f.substr(colon + 1)), k) || k < 1) {
          throw ParseError("line " + std::to_string(line_no) + ": bad cardinality in header field '" +
                               std::string(f) + "'",
                           line_no, static_cast<int>(c) + 1);
        }
        f = trim(f.substr(0, colon));
      }
      if (f.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": empty variable name", line_no,
                         static_cast<int>(c) + 1);
      }
      names.emplace_back(f);
      declared.push_back(k);
    }
    break;
  }
  if (names.empty()) throw ParseError("missing header row", std::max(line_no, 1), 1);

  const int D = static_cast<int>(names.size());
  std::vector<std::vector<int>> rows;
  std::vector<int> row_lines;
  std::vector<int> inferred(D, -1);
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto fields = split_fields(line);
    if (static_cast<int>(fields.size()) != D) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(D) +
                           " fields, found " + std::to_string(fields.size()),
                       line_no, std::min<int>(static_cast<int>(fields.size()), D) + 1);
    }
    std::vector<int> values(D);
    for (int d = 0; d < D; ++d) {
      if (fields[d] == "?") {
        values[d] = kMissing;
        continue;
      }
      if (!parse_int(fields[d], values[d]) || values[d] < 0) {
        throw ParseError("line " + std::to_string(line_no) + ", field " + std::to_string(d + 1) +
                             ": '" + std::string(fields[d]) +
                             "' is not a category index or '?'",
                         line_no, d + 1);
      }
      inferred[d] = std::max(inferred[d], values[d]);
    }
    rows.push_back(std::move(values));
    row_lines.push_back(line_no);
  }

  std::vector<int> cards(D);
  for (int d = 0; d < D; ++d) {
    if (declared[d] >= 0) {
      cards[d] = declared[d];
    } else if (inferred[d] < 0) {
      throw ParseError("variable '" + names[d] +
                           "' has no observed values; declare its cardinality as name:K",
                       1, d + 1);
    } else {
      cards[d] = std::max(inferred[d], 1);
    }
  }

  CategoricalDataset out(0, cards, names);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    for (int d = 0; d < D; ++d) {
      if (rows[n][d] > cards[d]) {
        throw CardinalityViolation("line " + std::to_string(row_lines[n]) + ", variable '" +
                                       names[d] + "': value " + std::to_string(rows[n][d]) +
                                       " exceeds declared cardinality " +
                                       std::to_string(cards[d]),
                                   static_cast<int>(n), d);
      }
    }
    out.append_row(rows[n]);
  }
  return out;
}

CategoricalDataset load_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const CategoricalDataset& data) {
  for (int d = 0; d < data.variables(); ++d) {
    if (d) out << ',';
    out << data.names()[d] << ':' << data.cardinality(d);
  }
  out << '\n';
  for (int n = 0; n < data.rows(); ++n) {
    for (int d = 0; d < data.variables(); ++d) {
      if (d) out << ',';
      if (data.missing(n, d)) out << '?';
      else out << data.at(n, d);
    }
    out << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const CategoricalDataset& data) {
  auto out = open_out(path);
  write_dataset(out, data);
}

void write_answers(std::ostream& out, const AnswerKey& key) {
  out << "row,variable,value\n";
  for (const auto& c : key.cells) out << c.row << ',' << c.variable << ',' << c.value << '\n';
}

AnswerKey read_answers(std::istream& in) {
  AnswerKey key;
  std::string line;
  int line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto fields = split_fields(line);
    if (header) {
      header = false;
      if (fields.size() == 3 && fields[0] == "row") continue;
    }
    if (fields.size() != 3) {
      throw ParseError("line " + std::to_string(line_no) + ": expected row,variable,value",
                       line_no, 1);
    }
    AnswerKey::Cell c;
    int* slots[3] = {&c.row, &c.variable, &c.value};
    for (int i = 0; i < 3; ++i) {
      if (!parse_int(fields[i], *slots[i]) || *slots[i] < 0) {
        throw ParseError("line " + std::to_string(line_no) + ": bad integer '" +
                             std::string(fields[i]) + "'",
                         line_no, i + 1);
      }
    }
    key.cells.push_back(c);
  }
  return key;
}

AnswerKey load_answers(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_answers(in);
}

void save_answers(const std::filesystem::path& path, const AnswerKey& key) {
  auto out = open_out(path);
  write_answers(out, key);
}

CategoricalDataset gen_xor(int n_per_config) {
  return xor_task(n_per_config).visible;
}

TaskSplit xor_task(int n_per_config) {
  if (n_per_config < 1) throw std::invalid_argument("gen_xor: n must be at least 1");
  TaskSplit task;
  task.visible = CategoricalDataset(0, {1, 1, 1}, {"a", "b", "a_xor_b"});
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int i = 0; i < n_per_config; ++i) task.visible.append_row({a, b, a ^ b});
    }
  }
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const int row = task.visible.rows();
      task.visible.append_row({a, b, kMissing});
      task.answers.cells.push_back({row, 2, a ^ b});
      task.test_rows.push_back(row);
    }
  }
  return task;
}

TaskSplit make_split(const CategoricalDataset& data, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw std::invalid_argument("make_split: test_fraction must lie in (0, 1)");
  }
  if (spec.cells_removed_per_test_row < 1) {
    throw std::invalid_argument("make_split: cells_removed_per_test_row must be positive");
  }
  const int N = data.rows();
  const int n_test = static_cast<int>(std::lround(spec.test_fraction * N));
  if (n_test < 1 || n_test >= N) {
    throw std::invalid_argument("make_split: " + std::to_string(N) +
                                " rows are too few for test fraction " +
                                std::to_string(spec.test_fraction));
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> test_rows(order.begin(), order.begin() + n_test);
  std::sort(test_rows.begin(), test_rows.end());

  TaskSplit split{data, {}, test_rows};
  for (int n : test_rows) {
    std::vector<int> observed;
    for (int d = 0; d < data.variables(); ++d) {
      if (!data.missing(n, d)) observed.push_back(d);
    }
    std::shuffle(observed.begin(), observed.end(), rng);
    const auto take = std::min<std::size_t>(observed.size(),
                                            static_cast<std::size_t>(spec.cells_removed_per_test_row));
    observed.resize(take);
    std::sort(observed.begin(), observed.end());
    for (int d : observed) {
      split.answers.cells.push_back({n, d, data.at(n, d)});
      split.visible.set(n, d, kMissing);
    }
  }
  return split;
}

}  // namespace clgp::data
