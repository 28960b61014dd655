#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "graphite/graph.hpp"
#include "graphite/sparse_rows.hpp"

namespace graphite {

class TransformedGraph;

// cos(a, b); zero when either row is the zero vector.
double cosine_similarity(SparseRows::Row a, SparseRows::Row b);

// max_k min(a[k], b[k]) over all `width` coordinates. Equals the
// shared-feature indicator on binary rows.
double share_similarity(SparseRows::Row a, SparseRows::Row b, std::size_t width);

// Mean edge-wise cosine similarity of feature rows. Throws UndefinedError on
// an empty edge set.
double feature_homophily(const SparseRows& features, std::span<const Edge> edges);

// Mean edge-wise label agreement: indicator for hard/hard, p[c] for hard/soft,
// Σ p[c]·q[c] for soft/soft. Throws DataError on an unlabeled endpoint.
double edge_homophily(const NodeLabels& labels, std::span<const Edge> edges);

// Edge homophily corrected for class degree mass. Soft labels contribute
// deg(v)·p[c] to each D_c. nullopt when the denominator is below 1e-12.
std::optional<double> adjusted_homophily(const NodeLabels& labels, std::span<const Edge> edges,
                                         std::span<const std::size_t> degrees);

// Mean edge-wise share_similarity; the hom(G) of the homophily guarantees.
double share_homophily(const SparseRows& features, std::span<const Edge> edges);

// Feature nodes get the empirical label distribution of their graph-node
// neighbors; graph nodes keep their hard labels.
SoftLabeledGraph assign_soft_labels(const TransformedGraph& tg);

struct MetricValue {
  std::optional<double> value;
  // Why the value is missing, when it is.
  std::string reason;

  bool defined() const { return value.has_value(); }
};

struct HomophilyReport {
  MetricValue feature_hom;
  MetricValue edge_hom;
  MetricValue adjusted_hom;
  MetricValue share_hom;
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  std::size_t num_features = 0;

  // One `key value` line per field, reals with 17 significant digits.
  std::string to_text() const;
};

HomophilyReport full_report(const Graph& g);
// Uses x_star rows for the feature metrics and soft labels on feature nodes
// for the label metrics, over all edges of the transformed graph.
HomophilyReport full_report(const TransformedGraph& tg);

}  // namespace graphite
