#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "grn/checkpoint.hpp"
#include "grn/encoders.hpp"
#include "grn/maxsat.hpp"

using grn::Tensor;

TEST(CheckpointTest, RoundTripsExactly) {
  std::mt19937_64 rng(3);
  const grn::maxsat::ProblemShape shape{.n_in = 10, .n_out = 1, .n_aux = 4, .m = 6};
  const auto rules = grn::maxsat::RuleMatrix::random(shape, rng);
  const grn::GnnConfig config{.input_width = 11, .hidden_size = 7};
  const auto gnn = grn::GnnParams::glorot(config, rng);

  grn::NamedTensors bundle = gnn.named("gnn.");
  bundle.emplace_back("rules", rules.weights());
  bundle.emplace_back("tiny", Tensor::vector({1e-300, -0.1, 1.0 / 3.0}));
  std::stringstream buf;
  grn::write_checkpoint(buf, bundle);
  const auto back = grn::read_checkpoint(buf);
  ASSERT_EQ(back.size(), bundle.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].first, bundle[i].first);
    EXPECT_EQ(back[i].second, bundle[i].second);
  }
  const auto restored = grn::GnnParams::from_named(back, "gnn.", config.num_layers);
  EXPECT_EQ(restored.conv, gnn.conv);
  EXPECT_EQ(grn::find_tensor(back, "rules"), rules.weights());
  EXPECT_THROW(grn::find_tensor(back, "missing"), std::out_of_range);
}

TEST(CheckpointTest, RejectsMalformedInput) {
  std::stringstream wrong_magic("something 1 0\n");
  EXPECT_THROW(grn::read_checkpoint(wrong_magic), std::runtime_error);
  std::stringstream truncated("grn-checkpoint 1 1\nw 2 2 2\n1 2\n3\n");
  EXPECT_THROW(grn::read_checkpoint(truncated), std::runtime_error);
  std::stringstream garbage("grn-checkpoint 1 1\nw 1 2\n1 x2\n");
  EXPECT_THROW(grn::read_checkpoint(garbage), std::runtime_error);
}
