#include <gtest/gtest.h>

#include <numeric>

#include "graphite/errors.hpp"
#include "graphite/homophily.hpp"
#include "graphite/transform.hpp"
#include "oracles.hpp"

namespace graphite {
namespace {

constexpr double kTol = 1e-12;

std::vector<double> row_values(const SparseRows& rows, std::size_t r) {
  std::vector<double> out(rows.width(), 0.0);
  const auto row = rows.row(r);
  for (std::size_t i = 0; i < row.size(); ++i) out[row.cols[i]] = row.vals[i];
  return out;
}

void expect_row(const SparseRows& rows, std::size_t r, const std::vector<double>& expected) {
  const auto got = row_values(rows, r);
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], expected[k], kTol) << "row " << r << " col " << k;
}

TEST(GraphiteTransform, Fixture) {
  const auto g = oracle::g_fig();
  const auto tg = graphite_transform(g);
  EXPECT_EQ(tg.num_graph_nodes(), 5u);
  EXPECT_EQ(tg.num_feature_nodes(), 3u);
  EXPECT_EQ(tg.num_feature_edges(), 7u);
  EXPECT_EQ(tg.num_graph_edges(), 4u);
  for (NodeId x = 5; x < 8; ++x) {
    EXPECT_TRUE(tg.is_feature_node(x));
    EXPECT_EQ(tg.feature_of(x), x - 5);
  }
  expect_row(tg.x_star(), 5, {1.0, 0.0, 0.5});
  expect_row(tg.x_star(), 6, {0.0, 1.0, 1.0 / 3.0});
  expect_row(tg.x_star(), 7, {0.5, 0.5, 1.0});
  expect_row(tg.x_star(), 1, {1.0, 0.0, 1.0});
  EXPECT_TRUE(tg.base().has_edge(1, 7));
  EXPECT_FALSE(tg.base().has_edge(0, 7));
}

TEST(GraphiteTransform, SingleSharedFeatureIsAVirtualNode) {
  GraphInput in;
  in.num_nodes = 4;
  in.num_features = 2;
  in.edges = {{0, 1}};
  in.features = {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {3, 1}};
  const auto tg = graphite_transform(Graph::build(in));
  // Feature 0 has every node; feature 1 only node 3.
  EXPECT_EQ(tg.base().degree(4), 4u);
  expect_row(tg.x_star(), 4, {1.0, 0.25});
  EXPECT_EQ(tg.base().degree(5), 1u);
  expect_row(tg.x_star(), 5, {1.0, 1.0});
}

TEST(GraphiteTransform, DropsUnusedFeatures) {
  GraphInput in;
  in.num_nodes = 2;
  in.num_features = 4;
  in.edges = {{0, 1}};
  in.features = {{0, 3}, {1, 1}};
  TransformStats stats;
  const auto tg = graphite_transform(Graph::build(in), Aggregator::averaging, &stats);
  EXPECT_EQ(stats.unused_features_dropped, 2u);
  EXPECT_EQ(tg.num_feature_nodes(), 2u);
  EXPECT_EQ(tg.feature_of(2), 1u);
  EXPECT_EQ(tg.feature_of(3), 3u);
}

TEST(GraphiteTransform, NothingToTransform) {
  GraphInput in;
  in.num_nodes = 2;
  in.num_features = 1;
  in.edges = {{0, 1}};
  try {
    graphite_transform(Graph::build(in));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("nothing to transform"), std::string::npos);
  }
}

TEST(Aggregators, AveragingAndMajority) {
  const auto g = oracle::g_fig();
  const auto avg = aggregate_feature_features(g, Aggregator::averaging);
  expect_row(avg, 2, {0.5, 0.5, 1.0});
  const auto maj = aggregate_feature_features(g, Aggregator::majority);
  expect_row(maj, 2, {0.0, 0.0, 1.0});
  expect_row(maj, 1, {0.0, 1.0, 0.0});
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(avg.at(k, static_cast<std::uint32_t>(k)), 1.0);
    EXPECT_EQ(maj.at(k, static_cast<std::uint32_t>(k)), 1.0);
  }
}

TEST(Nhb, Fixture) {
  const auto g = oracle::g_fig();
  const auto boosted = nhb_transform(g);
  EXPECT_EQ(boosted.num_edges(), 8u);
  for (const auto& [u, v] : std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {2, 3}, {2, 4}, {3, 4}}) {
    EXPECT_TRUE(boosted.has_edge(u, v));
  }
  EXPECT_EQ(count_shortcut_pairs(g), 4u);
}

TEST(Nhb, NoSharingAndCompleteGraph) {
  GraphInput disjoint;
  disjoint.num_nodes = 3;
  disjoint.num_features = 3;
  disjoint.edges = {{0, 1}};
  disjoint.features = {{0, 0}, {1, 1}, {2, 2}};
  const auto d = Graph::build(disjoint);
  EXPECT_EQ(nhb_transform(d), d);

  GraphInput all;
  all.num_nodes = 7;
  all.num_features = 1;
  all.edges = {{2, 5}};
  for (NodeId u = 0; u < 7; ++u) all.features.push_back({u, 0});
  EXPECT_EQ(nhb_transform(Graph::build(all)).num_edges(), 21u);
}

TEST(TwoHop, FixtureAndMutation) {
  const auto g = oracle::g_fig();
  const auto tg = graphite_transform(g);
  EXPECT_TRUE(verify_two_hop(g, tg));

  // Delete (v1, x1): v1 and v2 share only f1, so that pair loses its witness.
  auto in = tg.base().to_input();
  std::erase(in.edges, std::pair<NodeId, NodeId>{0, 5});
  auto mutated = TransformedGraph::from_parts(Graph::build(in), {tg.kinds().begin(), tg.kinds().end()},
                                              {tg.feature_provenance().begin(), tg.feature_provenance().end()},
                                              tg.x_star());
  EXPECT_FALSE(verify_two_hop(g, mutated));
}

TEST(FromParts, RejectsInconsistentStructure) {
  const auto tg = graphite_transform(oracle::g_fig());
  std::vector<NodeKind> kinds(tg.kinds().begin(), tg.kinds().end());
  std::vector<FeatureId> prov(tg.feature_provenance().begin(), tg.feature_provenance().end());
  auto in = tg.base().to_input();
  in.edges.emplace_back(5, 6);
  EXPECT_THROW(TransformedGraph::from_parts(Graph::build(in), kinds, prov, tg.x_star()), DataError);
  auto swapped = kinds;
  std::swap(swapped[0], swapped[7]);
  EXPECT_THROW(TransformedGraph::from_parts(tg.base(), swapped, prov, tg.x_star()), DataError);
  prov.pop_back();
  EXPECT_THROW(TransformedGraph::from_parts(tg.base(), kinds, prov, tg.x_star()), DataError);
}

TEST(Theorems, FixtureReports) {
  const auto g = oracle::g_fig();
  const auto naive = check_theorem_naive(g);
  EXPECT_TRUE(naive.assumptions_held);
  EXPECT_TRUE(naive.passed());
  EXPECT_NEAR(naive.hom_before, 0.25, kTol);
  EXPECT_NEAR(naive.hom_after, 0.625, kTol);
  EXPECT_EQ(naive.edges_added, 4u);
  EXPECT_TRUE(naive.bound_satisfied);

  const auto eff = check_theorem_efficient(g);
  EXPECT_TRUE(eff.passed());
  EXPECT_NEAR(eff.hom_after, 8.0 / 11.0, kTol);
  EXPECT_EQ(eff.nodes_added, 3u);
  EXPECT_EQ(eff.edges_added, 7u);
  EXPECT_TRUE(eff.homophily_increased);
}

TEST(Theorems, GateRejectsHomophilicAndDisjointGraphs) {
  GraphInput homophilic;
  homophilic.num_nodes = 3;
  homophilic.num_features = 1;
  homophilic.edges = {{0, 1}, {1, 2}};
  homophilic.features = {{0, 0}, {1, 0}, {2, 0}};
  const auto h = check_theorem_efficient(Graph::build(homophilic));
  EXPECT_FALSE(h.assumptions_held);
  EXPECT_TRUE(h.passed());
  EXPECT_FALSE(check_theorem_naive(Graph::build(homophilic)).assumptions_held);

  GraphInput disjoint;
  disjoint.num_nodes = 3;
  disjoint.num_features = 3;
  disjoint.edges = {{0, 1}, {1, 2}};
  disjoint.features = {{0, 0}, {1, 1}, {2, 2}};
  const auto d = check_theorem_naive(Graph::build(disjoint));
  EXPECT_FALSE(d.assumptions_held);
  EXPECT_TRUE(d.passed());

  GraphInput no_edges;
  no_edges.num_nodes = 2;
  no_edges.num_features = 1;
  no_edges.features = {{0, 0}, {1, 0}};
  const auto violations = check_assumptions(Graph::build(no_edges));
  EXPECT_NE(std::find(violations.begin(), violations.end(), "edge set is empty"), violations.end());
}

TEST(TransformProperties, RandomGraphs) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 120; ++trial) {
    const auto n = 5 + static_cast<std::size_t>(trial % 60);
    const auto g = oracle::random_graph(rng, n, 2 + trial % 8, 3.0 / static_cast<double>(n), 0.2);
    if (g.nnz() == 0) continue;
    const auto tg = graphite_transform(g);
    const auto boosted = nhb_transform(g);
    for (const auto& e : g.edges()) {
      EXPECT_TRUE(tg.base().has_edge(e.u, e.v));
      EXPECT_TRUE(boosted.has_edge(e.u, e.v));
    }
    EXPECT_EQ(boosted.num_edges() - g.num_edges(), oracle::shortcut_pairs(g));
    EXPECT_TRUE(verify_two_hop(g, tg));
    EXPECT_EQ(graphite_transform(g), tg);
    EXPECT_EQ(tg.num_feature_edges(), g.nnz());
    for (NodeId x = static_cast<NodeId>(n); x < tg.num_nodes(); ++x) {
      EXPECT_EQ(tg.x_star().at(x, tg.feature_of(x)), 1.0);
      for (const auto v : tg.base().neighbors(x)) EXPECT_FALSE(tg.is_feature_node(v));
    }
    if (check_assumptions(g).empty()) {
      EXPECT_TRUE(check_theorem_naive(g).passed());
      EXPECT_TRUE(check_theorem_efficient(g).passed());
    }
  }
}

// Mixing a multiset with one of strictly larger mean raises the mean.
TEST(TransformProperties, MeanOfUnionExceedsSmallerMean) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(1 + trial % 7);
    std::vector<double> b(1 + trial % 5);
    for (auto& x : a) x = oracle::uniform(rng);
    for (auto& x : b) x = oracle::uniform(rng);
    const auto mean = [](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    if (!(mean(a) < mean(b))) std::swap(a, b);
    if (!(mean(a) < mean(b))) continue;
    auto both = a;
    both.insert(both.end(), b.begin(), b.end());
    EXPECT_GT(mean(both), mean(a));
  }
}

}  // namespace
}  // namespace graphite
