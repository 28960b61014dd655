#include "graphite/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "graphite/errors.hpp"

namespace graphite {

namespace {

template <typename T>
std::vector<std::size_t> csr_offsets(std::size_t rows, const std::vector<std::pair<NodeId, T>>& sorted) {
  std::vector<std::size_t> offsets(rows + 1, 0);
  for (const auto& [r, _] : sorted) ++offsets[r + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return offsets;
}

}  // namespace

Graph Graph::build(const GraphInput& input, BuildStats* stats) {
  BuildStats local;
  Graph g;
  g.num_nodes_ = input.num_nodes;
  g.num_features_ = input.num_features;
  g.num_classes_ = input.num_classes;

  const auto n = input.num_nodes;
  std::vector<Edge> edges;
  edges.reserve(input.edges.size());
  for (std::size_t i = 0; i < input.edges.size(); ++i) {
    const auto [a, b] = input.edges[i];
    if (a >= n || b >= n) {
      std::ostringstream msg;
      msg << "edge #" << i << " (" << a << ", " << b << "): node id out of range (num_nodes = " << n << ")";
      throw DataError(msg.str());
    }
    if (a == b) {
      ++local.self_loops_dropped;
      continue;
    }
    edges.push_back({std::min(a, b), std::max(a, b)});
  }
  std::sort(edges.begin(), edges.end());
  const auto unique_end = std::unique(edges.begin(), edges.end());
  local.duplicate_edges_dropped = static_cast<std::size_t>(edges.end() - unique_end);
  edges.erase(unique_end, edges.end());
  g.edges_ = std::move(edges);

  std::vector<std::pair<NodeId, NodeId>> arcs;
  arcs.reserve(2 * g.edges_.size());
  for (const auto& e : g.edges_) {
    arcs.emplace_back(e.u, e.v);
    arcs.emplace_back(e.v, e.u);
  }
  std::sort(arcs.begin(), arcs.end());
  g.adj_offsets_ = csr_offsets(n, arcs);
  g.adjacency_.reserve(arcs.size());
  for (const auto& [_, v] : arcs) g.adjacency_.push_back(v);

  std::vector<std::pair<NodeId, FeatureId>> entries;
  entries.reserve(input.features.size());
  for (std::size_t i = 0; i < input.features.size(); ++i) {
    const auto& f = input.features[i];
    if (f.node >= n || f.feature >= input.num_features) {
      std::ostringstream msg;
      msg << "feature entry #" << i << " (node " << f.node << ", feature " << f.feature
          << "): index out of range (num_nodes = " << n << ", num_features = " << input.num_features << ")";
      throw DataError(msg.str());
    }
    if (f.value != 0.0 && f.value != 1.0) {
      std::ostringstream msg;
      msg << "feature entry #" << i << " (node " << f.node << ", feature " << f.feature << ") has value "
          << f.value << ": binary features required";
      throw DataError(msg.str());
    }
    if (f.value == 1.0) entries.emplace_back(f.node, f.feature);
  }
  std::sort(entries.begin(), entries.end());
  const auto feat_end = std::unique(entries.begin(), entries.end());
  local.duplicate_features_dropped = static_cast<std::size_t>(entries.end() - feat_end);
  entries.erase(feat_end, entries.end());
  g.feat_offsets_ = csr_offsets(n, entries);
  g.feature_ids_.reserve(entries.size());
  for (const auto& [_, k] : entries) g.feature_ids_.push_back(k);

  if (!input.labels.empty()) {
    if (input.labels.size() != n) {
      throw DataError("label vector has " + std::to_string(input.labels.size()) + " entries, expected " +
                      std::to_string(n));
    }
    for (std::size_t u = 0; u < n; ++u) {
      if (input.labels[u] && *input.labels[u] >= input.num_classes) {
        throw DataError("label of node " + std::to_string(u) + " is class " + std::to_string(*input.labels[u]) +
                        ", out of range (num_classes = " + std::to_string(input.num_classes) + ")");
      }
    }
    g.labels_ = input.labels;
  }

  if (stats) *stats = local;
  return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  const auto nbrs = neighbors(u);
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

bool Graph::shares_feature(NodeId u, NodeId v) const {
  const auto a = features(u);
  const auto b = features(v);
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

SparseRows Graph::feature_rows() const {
  SparseRows rows(num_features_);
  for (NodeId u = 0; u < num_nodes_; ++u) {
    std::vector<std::pair<std::uint32_t, double>> row;
    for (const auto k : features(u)) row.emplace_back(k, 1.0);
    rows.push_row(std::move(row));
  }
  return rows;
}

GraphInput Graph::to_input() const {
  GraphInput in;
  in.num_nodes = num_nodes_;
  in.num_features = num_features_;
  in.num_classes = num_classes_;
  for (const auto& e : edges_) in.edges.emplace_back(e.u, e.v);
  for (NodeId u = 0; u < num_nodes_; ++u) {
    for (const auto k : features(u)) in.features.push_back({u, k, 1.0});
  }
  in.labels = labels_;
  return in;
}

NodeLabels NodeLabels::from_hard(std::span<const std::optional<ClassId>> hard, std::size_t num_nodes,
                                 std::size_t num_classes) {
  NodeLabels labels(num_nodes, num_classes);
  for (std::size_t u = 0; u < hard.size() && u < num_nodes; ++u) {
    if (hard[u]) labels.set_hard(static_cast<NodeId>(u), *hard[u]);
  }
  return labels;
}

void NodeLabels::set_hard(NodeId u, ClassId c) {
  if (c >= num_classes_) throw DataError("class " + std::to_string(c) + " out of range");
  soft_[u].clear();
  hard_[u] = c;
}

void NodeLabels::set_soft(NodeId u, std::vector<double> probabilities) {
  if (probabilities.size() != num_classes_) {
    throw DataError("soft label of node " + std::to_string(u) + " has " + std::to_string(probabilities.size()) +
                    " entries, expected " + std::to_string(num_classes_));
  }
  double total = 0.0;
  for (const double p : probabilities) {
    if (!(p >= 0.0)) throw DataError("soft label of node " + std::to_string(u) + " has a negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DataError("soft label of node " + std::to_string(u) + " does not sum to 1");
  }
  hard_[u].reset();
  soft_[u] = std::move(probabilities);
}

double NodeLabels::probability(NodeId u, ClassId c) const {
  if (hard_[u]) return *hard_[u] == c ? 1.0 : 0.0;
  if (soft_[u].empty()) return 0.0;
  return soft_[u][c];
}

}  // namespace graphite
