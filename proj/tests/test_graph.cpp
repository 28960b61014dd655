#include <gtest/gtest.h>

#include <numeric>

#include "graphite/compensated_sum.hpp"
#include "graphite/errors.hpp"
#include "graphite/graph.hpp"
#include "oracles.hpp"

namespace graphite {
namespace {

TEST(GraphBuild, CanonicalizesSelfLoopsAndDuplicates) {
  GraphInput in;
  in.num_nodes = 2;
  in.edges = {{0, 1}, {1, 0}, {0, 0}};
  BuildStats stats;
  const auto g = Graph::build(in, &stats);
  ASSERT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(g.edges()[0], (Edge{0, 1}));
  EXPECT_EQ(stats.self_loops_dropped, 1u);
  EXPECT_EQ(stats.duplicate_edges_dropped, 1u);
}

TEST(GraphBuild, DeduplicatesAndSortsFeatures) {
  GraphInput in;
  in.num_nodes = 1;
  in.num_features = 4;
  in.features = {{0, 3}, {0, 1}, {0, 3}};
  BuildStats stats;
  const auto g = Graph::build(in, &stats);
  const auto f = g.features(0);
  EXPECT_EQ(std::vector<FeatureId>(f.begin(), f.end()), (std::vector<FeatureId>{1, 3}));
  EXPECT_EQ(stats.duplicate_features_dropped, 1u);
}

TEST(GraphBuild, FixtureCounts) {
  const auto g = oracle::g_fig();
  EXPECT_EQ(g.num_nodes(), 5u);
  EXPECT_EQ(g.num_edges(), 4u);
  EXPECT_EQ(g.nnz(), 7u);
  EXPECT_EQ(g.num_classes(), 2u);
}

TEST(GraphBuild, RejectsOutOfRangeNamingTheRecord) {
  GraphInput in;
  in.num_nodes = 3;
  in.edges = {{0, 1}, {1, 7}};
  try {
    Graph::build(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("edge #1"), std::string::npos) << e.what();
  }
  GraphInput feat;
  feat.num_nodes = 1;
  feat.num_features = 2;
  feat.features = {{0, 2}};
  EXPECT_THROW(Graph::build(feat), DataError);
  GraphInput lab;
  lab.num_nodes = 1;
  lab.num_classes = 2;
  lab.labels = {ClassId{2}};
  EXPECT_THROW(Graph::build(lab), DataError);
}

TEST(GraphBuild, RejectsNonBinaryFeatureValues) {
  GraphInput in;
  in.num_nodes = 1;
  in.num_features = 1;
  in.features = {{0, 0, 0.5}};
  try {
    Graph::build(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("binary features required"), std::string::npos);
  }
}

TEST(GraphQueries, SharesFeature) {
  const auto g = oracle::g_fig();
  EXPECT_TRUE(g.shares_feature(0, 1));
  EXPECT_FALSE(g.shares_feature(0, 2));
  for (NodeId u = 0; u < 5; ++u) EXPECT_TRUE(g.shares_feature(u, u));
}

TEST(GraphQueries, NeighborsAndDegree) {
  const auto g = oracle::g_fig();
  const auto n = g.neighbors(1);
  EXPECT_EQ(std::vector<NodeId>(n.begin(), n.end()), (std::vector<NodeId>{3, 4}));
  EXPECT_EQ(g.degree(1), 2u);

  GraphInput iso;
  iso.num_nodes = 2;
  const auto lonely = Graph::build(iso);
  EXPECT_TRUE(lonely.neighbors(0).empty());
  EXPECT_EQ(lonely.degree(0), 0u);

  GraphInput path;
  path.num_nodes = 3;
  path.edges = {{0, 1}, {1, 2}};
  EXPECT_EQ(Graph::build(path).degree(1), 2u);
}

TEST(GraphProperties, RoundTripSymmetryAndDegreeSum) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = oracle::random_graph(rng, 2 + trial % 30, 1 + trial % 7, 0.2, 0.3, trial % 3);
    EXPECT_EQ(Graph::build(g.to_input()), g);
    std::size_t degree_sum = 0;
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      degree_sum += g.degree(u);
      for (NodeId v = 0; v < g.num_nodes(); ++v) EXPECT_EQ(g.shares_feature(u, v), g.shares_feature(v, u));
    }
    EXPECT_EQ(degree_sum, 2 * g.num_edges());
  }
}

TEST(NodeLabels, SoftRowsMustBeDistributions) {
  NodeLabels labels(2, 2);
  labels.set_hard(0, 1);
  labels.set_soft(1, {0.25, 0.75});
  EXPECT_DOUBLE_EQ(labels.probability(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(labels.probability(1, 0), 0.25);
  EXPECT_THROW(labels.set_soft(1, {0.5, 0.6}), DataError);
  EXPECT_THROW(labels.set_soft(1, {-0.5, 1.5}), DataError);
  EXPECT_THROW(labels.set_soft(1, {1.0}), DataError);
}

TEST(CompensatedSum, RecoversCancelledTerms) {
  CompensatedSum s;
  s += 1.0;
  s += 1e100;
  s += 1.0;
  s += -1e100;
  EXPECT_EQ(s.value(), 2.0);
}

}  // namespace
}  // namespace graphite
