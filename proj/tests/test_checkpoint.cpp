#include <gtest/gtest.h>

#include <cmath>

#include "clgp/checkpoint.hpp"
#include "clgp/data.hpp"
#include "clgp/optimizer.hpp"
#include "fixtures.hpp"

using namespace clgp;

namespace {

void expect_same(const VariationalState& a, const VariationalState& b) {
  Parameters pa = a.params, pb = b.params;
  auto ba = parameter_blocks(pa);
  auto bb = parameter_blocks(pb);
  ASSERT_EQ(ba.size(), bb.size());
  for (std::size_t i = 0; i < ba.size(); ++i) {
    EXPECT_EQ(ba[i].name, bb[i].name);
    ASSERT_EQ(ba[i].values.size(), bb[i].values.size());
    for (std::size_t j = 0; j < ba[i].values.size(); ++j) EXPECT_EQ(ba[i].values[j], bb[i].values[j]);
  }
  EXPECT_EQ(a.include_kl_u, b.include_kl_u);
  EXPECT_EQ(a.sigma_x, b.sigma_x);
  EXPECT_EQ(a.seed, b.seed);
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  for (bool linear : {false, true}) {
    auto in = fixtures::small_instance(linear, 4);
    in.state.seed = 1234567890123ULL;
    auto text = checkpoint_to_string(in.state, in.data);
    auto cp = checkpoint_from_string(text);
    expect_same(in.state, cp.state);
    EXPECT_EQ(cp.cardinalities, in.data.cardinalities());
    EXPECT_EQ(checkpoint_to_string(cp.state, in.data), text);
  }
}

TEST(Checkpoint, FileRoundTrip) {
  auto d = data::gen_xor(2);
  TrainConfig c;
  c.inducing = 4;
  Rng rng(1);
  auto s = init_state(d, c, rng);
  auto path = std::filesystem::temp_directory_path() / "clgp_checkpoint_test.json";
  save_checkpoint(path, s, d);
  auto cp = load_checkpoint(path);
  expect_same(s, cp.state);
  EXPECT_EQ(cp.variable_names, d.names());
  std::filesystem::remove(path);
}

TEST(Checkpoint, RefusesNonFinite) {
  auto in = fixtures::small_instance(false, 5);
  in.state.params.m(0, 0) = std::nan("");
  EXPECT_THROW(checkpoint_to_string(in.state, in.data), CheckpointError);
}

TEST(Checkpoint, RejectsGarbage) {
  EXPECT_THROW(checkpoint_from_string("not json"), CheckpointError);
  EXPECT_THROW(checkpoint_from_string("{\"format\":\"other\",\"version\":1}"), CheckpointError);
  auto in = fixtures::small_instance(false, 6);
  auto doc = checkpoint_to_string(in.state, in.data);
  auto pos = doc.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos);
  doc.replace(pos, 12, "\"version\": 9");
  EXPECT_THROW(checkpoint_from_string(doc), CheckpointError);
}
