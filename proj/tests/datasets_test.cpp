#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "grn/datasets.hpp"
#include "support/motif_oracle.hpp"
#include "support/oracles.hpp"

using grn::Graph;
namespace data = grn::data;
namespace gt = grn::testing;
namespace fs = std::filesystem;

namespace {

Graph complete(int n) {
  std::vector<grn::Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return Graph(n, edges);
}

const Graph kCycle4(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
const Graph kDiamond(4, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}});

class TuFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("grn_tu_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& suffix, const std::string& text) {
    std::ofstream(dir_ / ("toy_" + suffix + ".txt")) << text;
  }

  // Triangle (nodes 1-3) and path (nodes 4-5) with labels -1 / 1.
  void write_valid() {
    write("A", "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n");
    write("graph_indicator", "1\n1\n1\n2\n2\n");
    write("graph_labels", "-1\n1\n");
  }

  fs::path dir_;
};

}  // namespace

TEST(DatasetsTest, ErdosRenyiLimits) {
  data::Rng rng(1);
  long edges = 0;
  for (int i = 0; i < 1000; ++i) edges += static_cast<long>(data::gen_erdos_renyi(12, 1e-9, rng).num_edges());
  EXPECT_EQ(edges, 0);
  EXPECT_TRUE(data::gen_erdos_renyi(12, 1.0 - 1e-12, rng).same_structure(complete(12)));
  EXPECT_THROW(data::gen_erdos_renyi(12, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(data::gen_erdos_renyi(0, 0.5, rng), std::invalid_argument);
}

TEST(DatasetsTest, ErdosRenyiEdgeDensity) {
  data::Rng rng(2);
  double edges = 0.0;
  for (int i = 0; i < 10000; ++i) edges += static_cast<double>(data::gen_erdos_renyi(12, 0.3, rng).num_edges());
  EXPECT_NEAR(edges / (10000.0 * 66.0), 0.3, 0.01);
}

TEST(DatasetsTest, RegularGraphs) {
  data::Rng rng(3);
  EXPECT_TRUE(data::gen_d_regular(4, 3, rng).same_structure(complete(4)));
  for (int i = 0; i < 100; ++i) {
    const Graph g = data::gen_d_regular(20, 3, rng);
    EXPECT_EQ(g.num_edges(), 30u);
    for (int v = 0; v < 20; ++v) EXPECT_EQ(g.degree(v), 3);
  }
  EXPECT_EQ(data::gen_d_regular(12, 0, rng).num_edges(), 0u);
  EXPECT_THROW(data::gen_d_regular(5, 3, rng), std::invalid_argument);
  EXPECT_THROW(data::gen_d_regular(4, 4, rng), std::invalid_argument);
}

TEST(DatasetsTest, MotifExamples) {
  EXPECT_EQ(data::count_motif(complete(4), data::Motif::triangle), 4);
  EXPECT_EQ(data::count_motif(complete(4), data::Motif::square), 3);
  EXPECT_EQ(data::count_motif(complete(4), data::Motif::diamond), 1);
  EXPECT_EQ(data::count_motif(kCycle4, data::Motif::square), 1);
  EXPECT_EQ(data::count_motif(kCycle4, data::Motif::triangle), 0);
  EXPECT_EQ(data::count_motif(kDiamond, data::Motif::triangle), 2);
  EXPECT_EQ(data::count_motif(kDiamond, data::Motif::diamond), 1);
  EXPECT_EQ(data::count_motif(kDiamond, data::Motif::square), 1);
  EXPECT_EQ(data::count_motif(Graph(1, {}), data::Motif::square), 0);
  EXPECT_THROW(data::count_motif(Graph(21, {}), data::Motif::triangle), std::invalid_argument);
}

TEST(DatasetsTest, MotifCountsMatchOracleExhaustively) {
  for (int n = 1; n <= 5; ++n)
    for (const Graph& g : gt::all_graphs(n))
      for (auto motif : {data::Motif::triangle, data::Motif::square, data::Motif::diamond})
        ASSERT_EQ(data::count_motif(g, motif), gt::oracle_motif_count(g, motif)) << "n=" << n;
}

TEST(DatasetsTest, MotifCountsMatchOracleOnRandomGraphs) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 4 + trial % 4;
    const Graph g = gt::random_graph(n, 0.2 + 0.6 * (trial % 7) / 6.0, rng);
    for (auto motif : {data::Motif::triangle, data::Motif::square, data::Motif::diamond})
      ASSERT_EQ(data::count_motif(g, motif), gt::oracle_motif_count(g, motif)) << "trial " << trial;
  }
}

TEST(DatasetsTest, Connectivity) {
  EXPECT_FALSE(data::is_connected(Graph(4, {{0, 1}, {2, 3}})));
  EXPECT_TRUE(data::is_connected(Graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}})));
  EXPECT_TRUE(data::is_connected(Graph(1, {})));
  data::Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Graph g = data::gen_erdos_renyi(12, 0.1 + 0.2 * (i % 3), rng);
    ASSERT_EQ(data::is_connected(g), gt::connected_union_find(g));
  }
}

TEST(DatasetsTest, LabelExamples) {
  EXPECT_EQ(data::label_synthetic(complete(4), {data::TaskKind::triangles, 2}), 1);
  EXPECT_EQ(data::label_synthetic(kCycle4, {data::TaskKind::squares, 3}), 0);
  EXPECT_EQ(data::label_synthetic(kCycle4, {data::TaskKind::connected, 0}), 1);
}

TEST(DatasetsTest, DefaultThresholds) {
  EXPECT_EQ(data::default_spec(data::Family::erdos_renyi, data::TaskKind::triangles).task.threshold, 6);
  EXPECT_EQ(data::default_spec(data::Family::erdos_renyi, data::TaskKind::squares).task.threshold, 6);
  EXPECT_EQ(data::default_spec(data::Family::erdos_renyi, data::TaskKind::diamond).task.threshold, 3);
  EXPECT_EQ(data::default_spec(data::Family::d_regular, data::TaskKind::triangles).task.threshold, 2);
  EXPECT_EQ(data::default_spec(data::Family::d_regular, data::TaskKind::squares).task.threshold, 3);
  EXPECT_THROW(data::default_spec(data::Family::d_regular, data::TaskKind::diamond), std::invalid_argument);
}

TEST(DatasetsTest, NaturalTriangleBalanceOnErdosRenyi) {
  auto spec = data::default_spec(data::Family::erdos_renyi, data::TaskKind::triangles);
  spec.seed = 6;
  const auto ds = data::generate_synthetic(spec);
  double positives = 0;
  for (const Graph& g : ds.graphs) positives += *g.label();
  const double rate = positives / static_cast<double>(ds.graphs.size());
  EXPECT_GE(rate, 0.3);
  EXPECT_LE(rate, 0.7);
}

TEST(DatasetsTest, BalancedSyntheticGeneration) {
  for (auto [family, task] : {std::pair{data::Family::erdos_renyi, data::TaskKind::connected},
                              std::pair{data::Family::erdos_renyi, data::TaskKind::diamond},
                              std::pair{data::Family::d_regular, data::TaskKind::squares}}) {
    auto spec = data::default_spec(family, task);
    spec.balanced = true;
    spec.seed = 9;
    const auto ds = data::generate_synthetic(spec);
    ASSERT_EQ(ds.graphs.size(), 1400u);
    int positives = 0;
    for (const Graph& g : ds.graphs) {
      positives += *g.label();
      ASSERT_EQ(*g.label(), data::label_synthetic(g, spec.task));
      ASSERT_EQ(g.num_nodes(), 12);
    }
    EXPECT_EQ(positives, 700);

    const auto again = data::generate_synthetic(spec);
    for (std::size_t i = 0; i < ds.graphs.size(); ++i) ASSERT_TRUE(ds.graphs[i].same_structure(again.graphs[i]));
  }
}

TEST_F(TuFixture, LoadsFixture) {
  write_valid();
  write("node_labels", "3\n3\n7\n3\n7\n");
  const auto ds = data::load_tu_dataset(dir_.string(), "toy", 15);
  ASSERT_EQ(ds.graphs.size(), 2u);
  EXPECT_TRUE(ds.graphs[0].same_structure(Graph(3, {{0, 1}, {1, 2}, {0, 2}})));
  EXPECT_TRUE(ds.graphs[1].same_structure(Graph(2, {{0, 1}})));
  EXPECT_EQ(*ds.graphs[0].label(), 0);
  EXPECT_EQ(*ds.graphs[1].label(), 1);
  EXPECT_EQ(ds.node_feature_width, 2);
  EXPECT_EQ(*ds.graphs[0].node_features(), (std::vector<std::vector<double>>{{1, 0}, {1, 0}, {0, 1}}));
  EXPECT_EQ(*ds.graphs[1].node_features(), (std::vector<std::vector<double>>{{1, 0}, {0, 1}}));
}

TEST_F(TuFixture, KeepsSingleBinaryLabel) {
  write_valid();
  write("graph_labels", "1\n1\n");
  const auto ds = data::load_tu_dataset(dir_.string(), "toy", 15);
  EXPECT_EQ(*ds.graphs[0].label(), 1);
  EXPECT_EQ(*ds.graphs[1].label(), 1);
}

TEST_F(TuFixture, FiltersLargeGraphs) {
  write_valid();
  const auto ds = data::load_tu_dataset(dir_.string(), "toy", 2);
  ASSERT_EQ(ds.graphs.size(), 1u);
  EXPECT_EQ(ds.graphs[0].num_nodes(), 2);
  EXPECT_EQ(ds.node_feature_width, 0);
}

TEST_F(TuFixture, ZeroBasedIdIsAParseError) {
  write_valid();
  write("A", "1, 2\n2, 1\n0, 3\n");
  try {
    data::load_tu_dataset(dir_.string(), "toy", 15);
    FAIL() << "expected a parse error";
  } catch (const data::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST_F(TuFixture, MalformedTokenReportsLine) {
  write_valid();
  write("graph_labels", "1\nx\n");
  try {
    data::load_tu_dataset(dir_.string(), "toy", 15);
    FAIL() << "expected a parse error";
  } catch (const data::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("toy_graph_labels.txt:2"), std::string::npos);
  }
}

TEST_F(TuFixture, StructuralErrors) {
  write_valid();
  write("graph_indicator", "1\n1\n3\n3\n3\n");
  EXPECT_THROW(data::load_tu_dataset(dir_.string(), "toy", 15), data::DatasetError);
  write_valid();
  write("graph_labels", "1\n");
  EXPECT_THROW(data::load_tu_dataset(dir_.string(), "toy", 15), data::DatasetError);
  write_valid();
  write("A", "1, 2\n");
  EXPECT_THROW(data::load_tu_dataset(dir_.string(), "toy", 15), data::DatasetError);
  write_valid();
  write("A", "3, 4\n4, 3\n");
  EXPECT_THROW(data::load_tu_dataset(dir_.string(), "toy", 15), data::ParseError);
  write_valid();
  write("graph_labels", "1\n2\n3\n");
  EXPECT_THROW(data::load_tu_dataset(dir_.string(), "toy", 15), data::DatasetError);
}

TEST_F(TuFixture, WriterRoundTrips) {
  auto spec = data::default_spec(data::Family::erdos_renyi, data::TaskKind::triangles);
  spec.train = 20;
  spec.val = spec.test = 5;
  spec.seed = 2;
  auto ds = data::generate_synthetic(spec);
  ds.graphs[3] = Graph(12, {});  // isolated vertices must survive the edge-list format
  ds.graphs[3].set_label(1);
  data::write_tu_dataset(dir_.string(), ds);
  const auto back = data::load_tu_dataset(dir_.string(), ds.name, 20);
  ASSERT_EQ(back.graphs.size(), ds.graphs.size());
  long nodes = 0;
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    EXPECT_TRUE(back.graphs[i].same_structure(ds.graphs[i]));
    EXPECT_EQ(back.graphs[i].label(), ds.graphs[i].label());
    nodes += back.graphs[i].num_nodes();
  }
  std::ifstream indicator(dir_ / (ds.name + "_graph_indicator.txt"));
  long lines = 0;
  for (std::string line; std::getline(indicator, line);) ++lines;
  EXPECT_EQ(nodes, lines);
}
