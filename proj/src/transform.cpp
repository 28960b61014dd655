#include "graphite/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "graphite/compensated_sum.hpp"
#include "graphite/errors.hpp"
#include "graphite/homophily.hpp"

namespace graphite {

namespace {

// postings[k] = nodes holding feature k, ascending.
std::vector<std::vector<NodeId>> feature_postings(const Graph& g) {
  std::vector<std::vector<NodeId>> postings(g.num_features());
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (const auto k : g.features(u)) postings[k].push_back(u);
  }
  return postings;
}

// Calls f(u, v) for every non-adjacent feature-sharing pair u < v, in
// lexicographic order.
template <typename F>
void for_each_shortcut_pair(const Graph& g, F&& f) {
  const auto postings = feature_postings(g);
  std::vector<NodeId> stamp(g.num_nodes(), std::numeric_limits<NodeId>::max());
  std::vector<NodeId> candidates;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    candidates.clear();
    for (const auto k : g.features(u)) {
      for (const NodeId v : postings[k]) {
        if (v <= u || stamp[v] == u) continue;
        stamp[v] = u;
        candidates.push_back(v);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    for (const NodeId v : candidates) {
      if (!g.has_edge(u, v)) f(u, v);
    }
  }
}

}  // namespace

TransformedGraph TransformedGraph::from_parts(Graph base, std::vector<NodeKind> kinds,
                                              std::vector<FeatureId> feature_of, SparseRows x_star) {
  const auto n = base.num_nodes();
  if (kinds.size() != n) throw DataError("node kind table does not cover every node");
  const auto first_feature = static_cast<std::size_t>(
      std::find(kinds.begin(), kinds.end(), NodeKind::feature_node) - kinds.begin());
  if (std::any_of(kinds.begin() + static_cast<std::ptrdiff_t>(first_feature), kinds.end(),
                  [](NodeKind k) { return k != NodeKind::feature_node; })) {
    throw DataError("feature nodes must follow all graph nodes");
  }
  if (feature_of.size() != n - first_feature) {
    throw DataError("feature provenance table does not match the number of feature nodes");
  }
  for (const auto k : feature_of) {
    if (k >= base.num_features()) throw DataError("feature provenance names feature " + std::to_string(k) + " out of range");
  }
  if (x_star.num_rows() != n) throw DataError("x_star row count does not match node count");

  TransformedGraph tg;
  tg.num_graph_nodes_ = first_feature;
  for (const auto& e : base.edges()) {
    const bool fu = kinds[e.u] == NodeKind::feature_node;
    const bool fv = kinds[e.v] == NodeKind::feature_node;
    if (fu && fv) throw DataError("edge between two feature nodes");
    if (fu || fv) {
      ++tg.num_feature_edges_;
    } else {
      ++tg.num_graph_edges_;
    }
  }
  tg.base_ = std::move(base);
  tg.kinds_ = std::move(kinds);
  tg.feature_of_ = std::move(feature_of);
  tg.x_star_ = std::move(x_star);
  return tg;
}

TransformedGraph TransformedGraph::identity(const Graph& g) {
  return from_parts(g, std::vector<NodeKind>(g.num_nodes(), NodeKind::graph_node), {}, g.feature_rows());
}

SparseRows aggregate_feature_features(const Graph& g, Aggregator mode) {
  const auto postings = feature_postings(g);
  const auto width = g.num_features();
  SparseRows rows(width);
  std::vector<CompensatedSum> acc(width);
  std::vector<std::size_t> counts(width, 0);
  std::vector<std::uint32_t> touched;
  for (FeatureId k = 0; k < width; ++k) {
    const auto& holders = postings[k];
    if (holders.empty()) continue;
    touched.clear();
    for (const NodeId v : holders) {
      for (const auto j : g.features(v)) {
        if (counts[j] == 0) touched.push_back(j);
        ++counts[j];
        acc[j] += 1.0;
      }
    }
    std::sort(touched.begin(), touched.end());
    std::vector<std::pair<std::uint32_t, double>> row;
    const auto deg = holders.size();
    for (const auto j : touched) {
      if (mode == Aggregator::averaging) {
        row.emplace_back(j, acc[j].value() / static_cast<double>(deg));
      } else if (2 * counts[j] > deg) {
        row.emplace_back(j, 1.0);
      }
      counts[j] = 0;
      acc[j] = CompensatedSum{};
    }
    rows.push_row(std::move(row));
  }
  return rows;
}

TransformedGraph graphite_transform(const Graph& g, Aggregator mode, TransformStats* stats) {
  if (g.nnz() == 0) throw DataError("nothing to transform: graph has no feature entries");
  const auto n = g.num_nodes();

  std::vector<std::int64_t> rank(g.num_features(), -1);
  std::vector<FeatureId> used;
  {
    std::vector<bool> seen(g.num_features(), false);
    for (NodeId u = 0; u < n; ++u) {
      for (const auto k : g.features(u)) seen[k] = true;
    }
    for (FeatureId k = 0; k < g.num_features(); ++k) {
      if (!seen[k]) continue;
      rank[k] = static_cast<std::int64_t>(used.size());
      used.push_back(k);
    }
  }
  if (stats) stats->unused_features_dropped = g.num_features() - used.size();

  GraphInput in = g.to_input();
  in.num_nodes = n + used.size();
  for (NodeId u = 0; u < n; ++u) {
    for (const auto k : g.features(u)) in.edges.emplace_back(u, static_cast<NodeId>(n + rank[k]));
  }
  if (!in.labels.empty()) in.labels.resize(in.num_nodes);
  Graph base = Graph::build(in);

  std::vector<NodeKind> kinds(n, NodeKind::graph_node);
  kinds.resize(n + used.size(), NodeKind::feature_node);

  const auto feature_rows = aggregate_feature_features(g, mode);
  SparseRows x_star(g.num_features());
  for (NodeId u = 0; u < n; ++u) {
    std::vector<std::pair<std::uint32_t, double>> row;
    for (const auto k : g.features(u)) row.emplace_back(k, 1.0);
    x_star.push_row(std::move(row));
  }
  for (std::size_t r = 0; r < feature_rows.num_rows(); ++r) {
    const auto src = feature_rows.row(r);
    std::vector<std::pair<std::uint32_t, double>> row;
    for (std::size_t i = 0; i < src.size(); ++i) row.emplace_back(src.cols[i], src.vals[i]);
    x_star.push_row(std::move(row));
  }

  return TransformedGraph::from_parts(std::move(base), std::move(kinds), std::move(used), std::move(x_star));
}

Graph nhb_transform(const Graph& g) {
  GraphInput in = g.to_input();
  for_each_shortcut_pair(g, [&in](NodeId u, NodeId v) { in.edges.emplace_back(u, v); });
  return Graph::build(in);
}

std::size_t count_shortcut_pairs(const Graph& g) {
  std::size_t count = 0;
  for_each_shortcut_pair(g, [&count](NodeId, NodeId) { ++count; });
  return count;
}

bool verify_two_hop(const Graph& g, const TransformedGraph& tg) {
  const auto postings = feature_postings(g);
  const auto& tb = tg.base();
  const auto none = std::numeric_limits<NodeId>::max();
  std::vector<NodeId> reachable(g.num_nodes(), none);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (const NodeId x : tb.neighbors(u)) {
      if (!tg.is_feature_node(x)) continue;
      for (const NodeId v : tb.neighbors(x)) {
        if (v < g.num_nodes()) reachable[v] = u;
      }
    }
    for (const auto k : g.features(u)) {
      for (const NodeId v : postings[k]) {
        if (v != u && reachable[v] != u) return false;
      }
    }
  }
  return true;
}

std::vector<std::string> check_assumptions(const Graph& g) {
  std::vector<std::string> violated;
  if (g.num_edges() == 0) {
    violated.emplace_back("edge set is empty");
  } else if (share_homophily(g.feature_rows(), g.edges()) >= 1.0) {
    violated.emplace_back("graph is not heterophilic: hom(G) = 1");
  }
  if (count_shortcut_pairs(g) == 0) violated.emplace_back("no non-adjacent feature-sharing pair");
  if (g.num_features() > g.num_nodes()) violated.emplace_back("more features than nodes");
  if (static_cast<double>(g.nnz()) > kFeatureDensityConstant * static_cast<double>(g.num_edges())) {
    violated.emplace_back("features too dense: nnz(X) > 8|E|");
  }
  return violated;
}

namespace {

double share_or_nan(const SparseRows& rows, std::span<const Edge> edges) {
  return edges.empty() ? std::numeric_limits<double>::quiet_NaN() : share_homophily(rows, edges);
}

void finish(TheoremReport& r) {
  r.assumptions_held = r.violated_assumptions.empty();
  r.homophily_increased = r.hom_after > r.hom_before;
  if (!r.bound_satisfied) r.failures.emplace_back("size bound violated");
  if (r.assumptions_held && !r.homophily_increased) r.failures.emplace_back("homophily did not increase");
}

}  // namespace

TheoremReport check_theorem_naive(const Graph& g) {
  TheoremReport r;
  r.violated_assumptions = check_assumptions(g);
  r.hom_before = share_or_nan(g.feature_rows(), g.edges());
  const Graph boosted = nhb_transform(g);
  r.edges_added = boosted.num_edges() - g.num_edges();
  r.hom_after = share_or_nan(boosted.feature_rows(), boosted.edges());
  const auto n = g.num_nodes();
  r.bound_satisfied = r.edges_added <= n * (n - (n > 0 ? 1 : 0)) / 2;
  finish(r);
  return r;
}

TheoremReport check_theorem_efficient(const Graph& g) {
  TheoremReport r;
  r.violated_assumptions = check_assumptions(g);
  const auto rows = g.feature_rows();
  r.hom_before = share_or_nan(rows, g.edges());
  std::size_t used = 0;
  {
    std::vector<bool> seen(g.num_features(), false);
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      for (const auto k : g.features(u)) {
        if (!seen[k]) ++used;
        seen[k] = true;
      }
    }
  }
  if (g.nnz() == 0) {
    r.hom_after = r.hom_before;
    r.bound_satisfied = true;
    finish(r);
    return r;
  }
  const auto tg = graphite_transform(g);
  r.nodes_added = tg.num_nodes() - g.num_nodes();
  r.edges_added = tg.base().num_edges() - g.num_edges();
  r.hom_after = share_or_nan(tg.x_star(), tg.base().edges());
  r.bound_satisfied = r.nodes_added == used && r.edges_added == g.nnz() && tg.num_feature_edges() == g.nnz();
  finish(r);
  return r;
}

}  // namespace graphite
