#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "graphite/sparse_rows.hpp"

namespace graphite {

using NodeId = std::uint32_t;
using FeatureId = std::uint32_t;
using ClassId = std::uint32_t;

// Undirected edge in canonical orientation (u < v).
struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  auto operator<=>(const Edge&) const = default;
};

// Repairs performed while canonicalizing raw input.
struct BuildStats {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicate_edges_dropped = 0;
  std::size_t duplicate_features_dropped = 0;
};

struct FeatureEntry {
  NodeId node = 0;
  FeatureId feature = 0;
  double value = 1.0;
};

// Raw, uncanonicalized graph description handed to Graph::build.
struct GraphInput {
  std::size_t num_nodes = 0;
  std::size_t num_features = 0;
  std::size_t num_classes = 0;
  std::vector<std::pair<NodeId, NodeId>> edges;
  // Values must be 0 or 1; zero entries are ignored.
  std::vector<FeatureEntry> features;
  // Empty, or one entry per node (nullopt = unlabeled).
  std::vector<std::optional<ClassId>> labels;
};

// Undirected simple graph with sparse binary node features and optional
// (partial) hard labels. Immutable once built.
class Graph {
 public:
  Graph() = default;

  // Validates indices, drops self-loops, deduplicates edges and feature
  // entries, and establishes canonical ordering. Throws DataError naming
  // the first offending record.
  static Graph build(const GraphInput& input, BuildStats* stats = nullptr);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_features() const { return num_features_; }
  std::size_t num_classes() const { return num_classes_; }

  // Canonical edges, sorted lexicographically.
  std::span<const Edge> edges() const { return edges_; }

  std::span<const NodeId> neighbors(NodeId u) const {
    return std::span(adjacency_).subspan(adj_offsets_[u], adj_offsets_[u + 1] - adj_offsets_[u]);
  }
  std::size_t degree(NodeId u) const { return adj_offsets_[u + 1] - adj_offsets_[u]; }
  bool has_edge(NodeId u, NodeId v) const;

  std::span<const FeatureId> features(NodeId u) const {
    return std::span(feature_ids_).subspan(feat_offsets_[u], feat_offsets_[u + 1] - feat_offsets_[u]);
  }
  // Number of stored feature entries, ‖X‖₀.
  std::size_t nnz() const { return feature_ids_.size(); }

  // True iff the feature sets of u and v intersect.
  bool shares_feature(NodeId u, NodeId v) const;

  bool has_labels() const { return !labels_.empty(); }
  std::optional<ClassId> label(NodeId u) const {
    return labels_.empty() ? std::nullopt : labels_[u];
  }
  std::span<const std::optional<ClassId>> labels() const { return labels_; }

  // Feature matrix as real rows with value 1 at every stored entry.
  SparseRows feature_rows() const;

  // Raw form that rebuilds an identical graph.
  GraphInput to_input() const;

  bool operator==(const Graph&) const = default;

 private:
  std::size_t num_nodes_ = 0;
  std::size_t num_features_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> adj_offsets_{0};
  std::vector<NodeId> adjacency_;
  std::vector<std::size_t> feat_offsets_{0};
  std::vector<FeatureId> feature_ids_;
  std::vector<std::optional<ClassId>> labels_;
};

// Per-node label that is hard, soft (a distribution over classes), or absent.
class NodeLabels {
 public:
  NodeLabels() = default;
  NodeLabels(std::size_t num_nodes, std::size_t num_classes)
      : num_classes_(num_classes), hard_(num_nodes), soft_(num_nodes) {}

  static NodeLabels from_hard(std::span<const std::optional<ClassId>> hard, std::size_t num_nodes,
                              std::size_t num_classes);

  void set_hard(NodeId u, ClassId c);
  // Row must have num_classes entries, all >= 0, summing to 1 within 1e-9.
  void set_soft(NodeId u, std::vector<double> probabilities);

  std::size_t num_nodes() const { return hard_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  bool is_labeled(NodeId u) const { return hard_[u].has_value() || !soft_[u].empty(); }
  const std::optional<ClassId>& hard(NodeId u) const { return hard_[u]; }
  std::span<const double> soft(NodeId u) const { return soft_[u]; }

  // Probability mass of class c at node u (indicator for hard labels).
  double probability(NodeId u, ClassId c) const;

 private:
  std::size_t num_classes_ = 0;
  std::vector<std::optional<ClassId>> hard_;
  std::vector<std::vector<double>> soft_;
};

// A graph where every node carries either a hard label or a soft label row.
struct SoftLabeledGraph {
  Graph graph;
  NodeLabels labels;
};

}  // namespace graphite
