#include "graphite/homophily.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "graphite/compensated_sum.hpp"
#include "graphite/errors.hpp"
#include "graphite/transform.hpp"

namespace graphite {

namespace {

double squared_norm(SparseRows::Row r) {
  CompensatedSum s;
  for (const double x : r.vals) s += x * x;
  return s.value();
}

void require_edges(std::span<const Edge> edges) {
  if (edges.empty()) throw UndefinedError("undefined: no edges");
}

double agreement(const NodeLabels& labels, NodeId u, NodeId v) {
  const auto& hu = labels.hard(u);
  const auto& hv = labels.hard(v);
  if (hu && hv) return *hu == *hv ? 1.0 : 0.0;
  if (hu) return labels.probability(v, *hu);
  if (hv) return labels.probability(u, *hv);
  const auto p = labels.soft(u);
  const auto q = labels.soft(v);
  CompensatedSum s;
  for (std::size_t c = 0; c < p.size(); ++c) s += p[c] * q[c];
  return s.value();
}

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename F>
MetricValue guarded(F&& f) {
  try {
    return {f(), {}};
  } catch (const UndefinedError& e) {
    return {std::nullopt, e.what()};
  } catch (const DataError& e) {
    return {std::nullopt, std::string("undefined: ") + e.what()};
  }
}

MetricValue adjusted_metric(const NodeLabels& labels, const Graph& g) {
  try {
    std::vector<std::size_t> degrees(g.num_nodes());
    for (NodeId u = 0; u < g.num_nodes(); ++u) degrees[u] = g.degree(u);
    const auto v = adjusted_homophily(labels, g.edges(), degrees);
    if (!v) return {std::nullopt, "undefined: degenerate class degree mass"};
    return {*v, {}};
  } catch (const UndefinedError& e) {
    return {std::nullopt, e.what()};
  } catch (const DataError& e) {
    return {std::nullopt, std::string("undefined: ") + e.what()};
  }
}

}  // namespace

double cosine_similarity(SparseRows::Row a, SparseRows::Row b) {
  const double na = squared_norm(a);
  const double nb = squared_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  CompensatedSum dot;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a.cols[i] == b.cols[j]) {
      dot += a.vals[i] * b.vals[j];
      ++i;
      ++j;
    } else if (a.cols[i] < b.cols[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return dot.value() / (std::sqrt(na) * std::sqrt(nb));
}

double share_similarity(SparseRows::Row a, SparseRows::Row b, std::size_t width) {
  // Columns stored in only one row, or in neither, contribute min(x, 0).
  double best = -std::numeric_limits<double>::infinity();
  std::size_t common = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a.cols[i] < b.cols[j])) {
      best = std::max(best, std::min(a.vals[i], 0.0));
      ++i;
    } else if (i == a.size() || b.cols[j] < a.cols[i]) {
      best = std::max(best, std::min(b.vals[j], 0.0));
      ++j;
    } else {
      best = std::max(best, std::min(a.vals[i], b.vals[j]));
      ++common;
      ++i;
      ++j;
    }
  }
  const std::size_t touched = a.size() + b.size() - common;
  if (touched < width) best = std::max(best, 0.0);
  return width == 0 ? 0.0 : best;
}

double feature_homophily(const SparseRows& features, std::span<const Edge> edges) {
  require_edges(edges);
  CompensatedSum s;
  for (const auto& e : edges) s += cosine_similarity(features.row(e.u), features.row(e.v));
  return s.value() / static_cast<double>(edges.size());
}

double edge_homophily(const NodeLabels& labels, std::span<const Edge> edges) {
  require_edges(edges);
  CompensatedSum s;
  for (const auto& e : edges) {
    for (const NodeId x : {e.u, e.v}) {
      if (!labels.is_labeled(x)) throw DataError("missing label for node " + std::to_string(x));
    }
    s += agreement(labels, e.u, e.v);
  }
  return s.value() / static_cast<double>(edges.size());
}

std::optional<double> adjusted_homophily(const NodeLabels& labels, std::span<const Edge> edges,
                                         std::span<const std::size_t> degrees) {
  const double h_edge = edge_homophily(labels, edges);
  std::vector<CompensatedSum> mass(labels.num_classes());
  for (NodeId u = 0; u < degrees.size(); ++u) {
    if (degrees[u] == 0 || !labels.is_labeled(u)) continue;
    const auto d = static_cast<double>(degrees[u]);
    if (const auto& h = labels.hard(u)) {
      mass[*h] += d;
    } else {
      const auto p = labels.soft(u);
      for (std::size_t c = 0; c < p.size(); ++c) mass[c] += d * p[c];
    }
  }
  const double two_e = 2.0 * static_cast<double>(edges.size());
  CompensatedSum expected;
  for (const auto& m : mass) {
    const double share = m.value() / two_e;
    expected += share * share;
  }
  const double denom = 1.0 - expected.value();
  if (denom < 1e-12) return std::nullopt;
  return (h_edge - expected.value()) / denom;
}

double share_homophily(const SparseRows& features, std::span<const Edge> edges) {
  require_edges(edges);
  CompensatedSum s;
  for (const auto& e : edges) s += share_similarity(features.row(e.u), features.row(e.v), features.width());
  return s.value() / static_cast<double>(edges.size());
}

SoftLabeledGraph assign_soft_labels(const TransformedGraph& tg) {
  const auto& g = tg.base();
  const auto num_classes = g.num_classes();
  NodeLabels labels(g.num_nodes(), num_classes);
  for (NodeId u = 0; u < tg.num_graph_nodes(); ++u) {
    const auto c = g.label(u);
    if (!c) throw DataError("missing label for node " + std::to_string(u));
    labels.set_hard(u, *c);
  }
  for (NodeId x = static_cast<NodeId>(tg.num_graph_nodes()); x < g.num_nodes(); ++x) {
    const auto nbrs = g.neighbors(x);
    assert(!nbrs.empty());
    std::vector<std::size_t> counts(num_classes, 0);
    for (const NodeId v : nbrs) ++counts[*g.label(v)];
    std::vector<double> row(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
      row[c] = static_cast<double>(counts[c]) / static_cast<double>(nbrs.size());
    }
    labels.set_soft(x, std::move(row));
  }
  return {g, std::move(labels)};
}

std::string HomophilyReport::to_text() const {
  std::ostringstream out;
  const auto emit = [&out](const char* key, const MetricValue& m) {
    out << key << ' ' << (m.value ? format_real(*m.value) : std::string("undefined")) << '\n';
  };
  emit("share_hom", share_hom);
  emit("feature_hom", feature_hom);
  emit("edge_hom", edge_hom);
  emit("adjusted_hom", adjusted_hom);
  out << "num_nodes " << num_nodes << '\n';
  out << "num_edges " << num_edges << '\n';
  out << "num_features " << num_features << '\n';
  return out.str();
}

HomophilyReport full_report(const Graph& g) {
  HomophilyReport r;
  r.num_nodes = g.num_nodes();
  r.num_edges = g.num_edges();
  r.num_features = g.num_features();
  const auto rows = g.feature_rows();
  r.share_hom = guarded([&] { return share_homophily(rows, g.edges()); });
  r.feature_hom = guarded([&] { return feature_homophily(rows, g.edges()); });
  if (!g.has_labels()) {
    r.edge_hom = {std::nullopt, "undefined: graph has no labels"};
    r.adjusted_hom = r.edge_hom;
    return r;
  }
  const auto labels = NodeLabels::from_hard(g.labels(), g.num_nodes(), g.num_classes());
  r.edge_hom = guarded([&] { return edge_homophily(labels, g.edges()); });
  r.adjusted_hom = adjusted_metric(labels, g);
  return r;
}

HomophilyReport full_report(const TransformedGraph& tg) {
  const auto& g = tg.base();
  HomophilyReport r;
  r.num_nodes = g.num_nodes();
  r.num_edges = g.num_edges();
  r.num_features = g.num_features();
  r.share_hom = guarded([&] { return share_homophily(tg.x_star(), g.edges()); });
  r.feature_hom = guarded([&] { return feature_homophily(tg.x_star(), g.edges()); });
  SoftLabeledGraph soft;
  try {
    soft = assign_soft_labels(tg);
  } catch (const DataError& e) {
    r.edge_hom = {std::nullopt, std::string("undefined: ") + e.what()};
    r.adjusted_hom = r.edge_hom;
    return r;
  }
  r.edge_hom = guarded([&] { return edge_homophily(soft.labels, g.edges()); });
  r.adjusted_hom = adjusted_metric(soft.labels, g);
  return r;
}

}  // namespace graphite
