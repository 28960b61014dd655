#include "graphite/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "graphite/errors.hpp"
#include "graphite/gnn.hpp"
#include "graphite/transform.hpp"

namespace graphite {

namespace {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(gnn::uniform01(rng) * static_cast<double>(n)));
}

}  // namespace

Graph draw_synthetic(const SyntheticParams& p, std::mt19937_64& rng) {
  if (p.num_classes == 0 || p.num_nodes < std::max<std::size_t>(2, p.num_classes) ||
      p.num_features < p.num_classes) {
    throw ConfigError("synthetic graph needs two nodes, one node per class and one feature per class");
  }
  if (p.features_per_node == 0 || p.features_per_node > p.num_features / p.num_classes) {
    throw ConfigError("features_per_node must be between 1 and the per-class pool size");
  }
  if (!(p.p_cross >= 0.0 && p.p_cross <= 1.0) || !(p.feature_noise >= 0.0 && p.feature_noise <= 1.0) ||
      !(p.avg_degree >= 0.0)) {
    throw ConfigError("synthetic probabilities must lie in [0, 1] and avg_degree must be non-negative");
  }

  const auto n = p.num_nodes;
  const auto classes = p.num_classes;
  GraphInput in;
  in.num_nodes = n;
  in.num_features = p.num_features;
  in.num_classes = classes;

  // Balanced class assignment in shuffled order.
  std::vector<NodeId> order(n);
  for (NodeId u = 0; u < n; ++u) order[u] = u;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  in.labels.resize(n);
  std::vector<std::vector<NodeId>> members(classes);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<ClassId>(i % classes);
    in.labels[order[i]] = c;
    members[c].push_back(order[i]);
  }
  for (auto& m : members) std::sort(m.begin(), m.end());

  // Pool of class c: features k with k % classes == c.
  const auto pool_size = p.num_features / classes;
  for (NodeId u = 0; u < n; ++u) {
    const auto c = *in.labels[u];
    std::set<FeatureId> chosen;
    while (chosen.size() < p.features_per_node) {
      FeatureId k = 0;
      if (gnn::uniform01(rng) < p.feature_noise) {
        k = static_cast<FeatureId>(uniform_index(rng, p.num_features));
      } else {
        k = static_cast<FeatureId>(uniform_index(rng, pool_size) * classes + c);
      }
      chosen.insert(k);
    }
    for (const auto k : chosen) in.features.push_back({u, k, 1.0});
  }

  const auto target = static_cast<std::size_t>(std::llround(p.avg_degree * static_cast<double>(n) / 2.0));
  const auto max_pairs = n * (n - 1) / 2;
  std::set<std::pair<NodeId, NodeId>> edges;
  for (std::size_t attempt = 0; edges.size() < std::min(target, max_pairs) && attempt < 100 * target + 100;
       ++attempt) {
    const auto u = static_cast<NodeId>(uniform_index(rng, n));
    const auto cu = *in.labels[u];
    const bool cross = classes > 1 && gnn::uniform01(rng) < p.p_cross;
    ClassId cv = cu;
    if (cross) {
      cv = static_cast<ClassId>((cu + 1 + uniform_index(rng, classes - 1)) % classes);
    }
    const auto& pool = members[cv];
    const auto v = pool[uniform_index(rng, pool.size())];
    if (u == v) continue;
    edges.emplace(std::min(u, v), std::max(u, v));
  }
  in.edges.assign(edges.begin(), edges.end());
  return Graph::build(in);
}

Graph generate_synthetic(const SyntheticParams& params) {
  std::mt19937_64 rng(params.seed);
  std::vector<std::string> last;
  for (std::size_t attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    auto g = draw_synthetic(params, rng);
    last = check_assumptions(g);
    if (last.empty()) return g;
  }
  std::string why;
  for (const auto& v : last) why += (why.empty() ? "" : "; ") + v;
  throw DataError("synthetic generator could not satisfy the assumption gate after " +
                  std::to_string(kMaxGenerationAttempts) + " attempts (last draw: " + why + ")");
}

}  // namespace graphite
