#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "clgp/data.hpp"

using namespace clgp;
using namespace clgp::data;

namespace {

CategoricalDataset parse(const std::string& text) {
  std::istringstream in(text);
  return read_dataset(in);
}

}  // namespace

TEST(Dataset, LoadsRowsAndMissing) {
  auto d = parse("x,y,z\n0,1,1\n1,0,?\n");
  EXPECT_EQ(d.rows(), 2);
  EXPECT_EQ(d.variables(), 3);
  EXPECT_EQ(d.missing_count(), 1);
  EXPECT_TRUE(d.missing(1, 2));
  EXPECT_EQ(d.names()[1], "y");
}

TEST(Dataset, DeclaredAndInferredCardinality) {
  auto d = parse("# comment\nx:4,y\n\n0,0\n2,0\n");
  EXPECT_EQ(d.cardinality(0), 4);
  EXPECT_EQ(d.cardinality(1), 1);
}

TEST(Dataset, RoundTrip) {
  auto d = parse("a,b:3,c\n0,1,1\n1,?,0\n1,3,?\n");
  std::ostringstream out;
  write_dataset(out, d);
  EXPECT_EQ(parse(out.str()), d);
  EXPECT_EQ(out.str().substr(0, 12), "a:1,b:3,c:1\n");
}

TEST(Dataset, FileRoundTrip) {
  auto d = gen_xor(2);
  auto path = std::filesystem::temp_directory_path() / "clgp_data_roundtrip.csv";
  save_dataset(path, d);
  EXPECT_EQ(load_dataset(path), d);
  std::filesystem::remove(path);
}

TEST(Dataset, CardinalityViolationLocation) {
  try {
    parse("a:2,b:1\n0,1\n2,0\n1,2\n");
    FAIL();
  } catch (const CardinalityViolation& e) {
    EXPECT_EQ(e.row(), 2);
    EXPECT_EQ(e.column(), 1);
  }
}

TEST(Dataset, ParseErrors) {
  try {
    parse("a,b\n0,1\n0\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  try {
    parse("a,b\n0,x\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 2);
  }
  EXPECT_THROW(parse("a,b\n0,?\n"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("a:0\n0\n"), ParseError);
}

TEST(Answers, RoundTrip) {
  AnswerKey key{{{0, 1, 2}, {5, 0, 0}}};
  std::ostringstream out;
  write_answers(out, key);
  std::istringstream in(out.str());
  EXPECT_EQ(read_answers(in), key);
}

TEST(Xor, Counts) {
  auto d = gen_xor(25);
  EXPECT_EQ(d.rows(), 104);
  EXPECT_EQ(d.missing_count(), 4);
  EXPECT_EQ(gen_xor(1).rows(), 8);
  EXPECT_THROW(gen_xor(0), std::invalid_argument);
}

TEST(Xor, ObservedRowsSatisfyRelation) {
  auto task = xor_task(4);
  const auto& d = task.visible;
  for (int n = 0; n < d.rows(); ++n) {
    if (d.missing(n, 2)) continue;
    EXPECT_EQ(d.at(n, 2), d.at(n, 0) ^ d.at(n, 1));
  }
  ASSERT_EQ(task.answers.cells.size(), 4u);
  for (const auto& c : task.answers.cells) {
    EXPECT_TRUE(d.missing(c.row, c.variable));
    EXPECT_EQ(c.value, d.at(c.row, 0) ^ d.at(c.row, 1));
  }
}

TEST(Split, SizeAndDeterminism) {
  CategoricalDataset d(0, {3, 3, 3});
  for (int n = 0; n < 1000; ++n) d.append_row({n % 4, (n / 4) % 4, (n / 16) % 4});
  auto a = make_split(d, {0.2, 5, 1});
  auto b = make_split(d, {0.2, 5, 1});
  EXPECT_EQ(a.test_rows.size(), 200u);
  EXPECT_EQ(a.answers.cells.size(), 200u);
  EXPECT_EQ(a.visible, b.visible);
  EXPECT_EQ(a.answers, b.answers);
  EXPECT_NE(make_split(d, {0.2, 6, 1}).answers, a.answers);
}

TEST(Split, PartitionsTestRows) {
  CategoricalDataset d(0, {2, 2, 2});
  for (int n = 0; n < 50; ++n) d.append_row({n % 3, n % 2, (n * 7) % 3});
  auto s = make_split(d, {0.3, 1, 2});
  std::set<std::pair<int, int>> hidden;
  for (const auto& c : s.answers.cells) {
    hidden.insert({c.row, c.variable});
    EXPECT_EQ(c.value, d.at(c.row, c.variable));
  }
  for (int n = 0; n < d.rows(); ++n) {
    for (int v = 0; v < 3; ++v) {
      if (hidden.count({n, v})) EXPECT_TRUE(s.visible.missing(n, v));
      else EXPECT_EQ(s.visible.at(n, v), d.at(n, v));
    }
  }
  EXPECT_EQ(hidden.size(), 2 * s.test_rows.size());
}

TEST(Split, RejectsDegenerateFractions) {
  auto d = gen_xor(1);
  EXPECT_THROW(make_split(d, {0.0, 0, 1}), std::invalid_argument);
  EXPECT_THROW(make_split(d, {0.01, 0, 1}), std::invalid_argument);
}
