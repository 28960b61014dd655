#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "graphite/graph.hpp"

namespace graphite {

// Two-class (or more) heterophilic benchmark: every class owns a disjoint
// pool of signature features, nodes draw their features mostly from their
// own pool, and edges mostly join nodes of different classes.
struct SyntheticParams {
  std::size_t num_nodes = 500;
  std::size_t num_classes = 2;
  std::size_t num_features = 50;
  std::size_t features_per_node = 3;
  // Probability that a feature draw comes from the whole feature set rather
  // than the node's own class pool.
  double feature_noise = 0.4;
  double avg_degree = 2.0;
  // Probability that an edge joins two different classes.
  double p_cross = 0.95;
  std::uint64_t seed = 7;
};

inline constexpr std::size_t kMaxGenerationAttempts = 100;

// Draws graphs until one passes the heterophily/sparsity assumption gate.
// Throws DataError after kMaxGenerationAttempts failed draws.
Graph generate_synthetic(const SyntheticParams& params);

// One unconditioned draw of the generator above.
Graph draw_synthetic(const SyntheticParams& params, std::mt19937_64& rng);

}  // namespace graphite
