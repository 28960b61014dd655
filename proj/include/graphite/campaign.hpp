#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "graphite/graph.hpp"

namespace graphite {

// Randomized verification of the homophily guarantees of both transforms
// and the two-hop witness property, with brute-force oracles.
struct CampaignConfig {
  std::size_t num_graphs = 1000;
  std::size_t min_nodes = 10;
  std::size_t max_nodes = 300;
  double min_avg_degree = 1.0;
  double max_avg_degree = 6.0;
  std::size_t min_features = 2;
  std::size_t max_features = 64;  // also capped at the node count
  std::size_t min_features_per_node = 1;
  std::size_t max_features_per_node = 4;
  // Redraw (up to kMaxGenerationAttempts times) until the assumption gate
  // passes. Without it, failing draws are kept and reported as gated out.
  bool force_heterophily = true;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  // Where reproduction bundles of failing graphs go; none written if empty.
  std::filesystem::path bundle_dir;

  void validate() const;
};

struct GraphResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  std::size_t num_features = 0;
  std::size_t nnz = 0;
  bool gated_out = false;
  double hom_before = 0.0;
  double hom_graphite = 0.0;
  double hom_nhb = 0.0;
  std::size_t graphite_nodes_added = 0;
  std::size_t graphite_edges_added = 0;
  std::size_t nhb_edges_added = 0;
  double transform_seconds = 0.0;
  double metric_seconds = 0.0;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

struct CampaignReport {
  std::vector<GraphResult> graphs;  // in graph-index order
  std::size_t gated_out = 0;
  std::size_t failed = 0;
  std::vector<std::filesystem::path> bundles;

  bool passed() const { return failed == 0; }
  // Deterministic for a given config unless timings are included.
  std::string to_text(bool include_timings = false) const;
};

// Per-graph seed derived from the campaign seed and the graph index.
std::uint64_t graph_seed(std::uint64_t campaign_seed, std::size_t index);

// One random campaign graph (no gating).
Graph draw_campaign_graph(const CampaignConfig& config, std::mt19937_64& rng);

// Runs every check and oracle on one graph.
GraphResult verify_graph(const Graph& g);

CampaignReport run_campaign(const CampaignConfig& config);

// Writes graph files and seed.txt under dir.
void write_bundle(const std::filesystem::path& dir, const Graph& g, std::uint64_t seed, const GraphResult& result);

}  // namespace graphite
