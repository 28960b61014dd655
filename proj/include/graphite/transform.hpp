#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "graphite/graph.hpp"
#include "graphite/sparse_rows.hpp"

namespace graphite {

enum class NodeKind : std::uint8_t { graph_node, feature_node };

// How the feature row of a feature node is built from its graph-node
// neighbors.
enum class Aggregator {
  averaging,  // arithmetic mean of neighbor rows
  majority,   // 1 where strictly more than half the neighbors have the feature
};

// A graph augmented with one feature node per used feature and one feature
// edge per stored feature entry. Graph nodes keep ids 0..|V|-1; the feature
// node for feature k has id |V| + rank of k among the used features.
class TransformedGraph {
 public:
  TransformedGraph() = default;

  // Assembles a transformed graph from its parts. Checks structural
  // consistency (kinds, provenance, no feature-feature edges, row counts) but
  // not that the feature edges match the original features exactly.
  static TransformedGraph from_parts(Graph base, std::vector<NodeKind> kinds, std::vector<FeatureId> feature_of,
                                     SparseRows x_star);

  // The untransformed graph viewed as a transformed graph with no feature
  // nodes; x_star holds the binary rows.
  static TransformedGraph identity(const Graph& g);

  const Graph& base() const { return base_; }
  NodeKind kind(NodeId u) const { return kinds_[u]; }
  std::span<const NodeKind> kinds() const { return kinds_; }
  bool is_feature_node(NodeId u) const { return kinds_[u] == NodeKind::feature_node; }

  // Feature represented by feature node u (u >= num_graph_nodes()).
  FeatureId feature_of(NodeId u) const { return feature_of_[u - num_graph_nodes_]; }
  std::span<const FeatureId> feature_provenance() const { return feature_of_; }

  const SparseRows& x_star() const { return x_star_; }

  std::size_t num_nodes() const { return base_.num_nodes(); }
  std::size_t num_graph_nodes() const { return num_graph_nodes_; }
  std::size_t num_feature_nodes() const { return feature_of_.size(); }
  std::size_t num_graph_edges() const { return num_graph_edges_; }
  std::size_t num_feature_edges() const { return num_feature_edges_; }

  bool operator==(const TransformedGraph&) const = default;

 private:
  Graph base_;
  std::vector<NodeKind> kinds_;
  std::vector<FeatureId> feature_of_;
  SparseRows x_star_;
  std::size_t num_graph_nodes_ = 0;
  std::size_t num_graph_edges_ = 0;
  std::size_t num_feature_edges_ = 0;
};

struct TransformStats {
  // Features declared but held by no node; no feature node is created.
  std::size_t unused_features_dropped = 0;
};

// Feature-node rows, one per used feature in ascending feature order.
SparseRows aggregate_feature_features(const Graph& g, Aggregator mode);

// Throws DataError("nothing to transform") when g has no feature entries.
TransformedGraph graphite_transform(const Graph& g, Aggregator mode = Aggregator::averaging,
                                    TransformStats* stats = nullptr);

// Adds an edge between every non-adjacent pair of nodes sharing a feature.
Graph nhb_transform(const Graph& g);

// Number of non-adjacent feature-sharing pairs (the edges nhb_transform adds).
std::size_t count_shortcut_pairs(const Graph& g);

// True iff every feature-sharing pair of graph nodes has a common
// feature-node neighbor in tg.
bool verify_two_hop(const Graph& g, const TransformedGraph& tg);

struct TheoremReport {
  double hom_before = 0.0;
  double hom_after = 0.0;
  std::size_t nodes_added = 0;
  std::size_t edges_added = 0;
  bool bound_satisfied = false;
  bool homophily_increased = false;
  bool assumptions_held = false;
  std::vector<std::string> violated_assumptions;
  // Assertions that failed; only bound and (when assumptions hold)
  // homophily assertions are made.
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

// Constant c in the sparse-feature assumption nnz(X) <= c·|E|.
inline constexpr double kFeatureDensityConstant = 8.0;

// Heterophily and sparsity assumptions under which the homophily guarantees
// hold. Returns the violated ones (empty when all hold).
std::vector<std::string> check_assumptions(const Graph& g);

TheoremReport check_theorem_naive(const Graph& g);
TheoremReport check_theorem_efficient(const Graph& g);

}  // namespace graphite
