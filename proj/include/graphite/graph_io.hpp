#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "graphite/graph.hpp"
#include "graphite/trainer.hpp"
#include "graphite/transform.hpp"

namespace graphite::io {

// External names of the dense ids, indexed by id.
struct NameTable {
  std::vector<std::string> nodes;
  std::vector<std::string> features;
  std::vector<std::string> classes;
};

struct ParseOptions {
  // Maps a real feature value to 1 iff it exceeds the threshold. Without it
  // any value other than 0/1 is rejected.
  std::optional<double> binarize_threshold;
};

struct GraphDataset {
  Graph graph;
  NameTable names;
  std::optional<gnn::Split> split;
  BuildStats stats;
};

// Reads a graph directory:
//   edges.tsv     node<TAB>node
//   features.tsv  node<TAB>feature[<TAB>value]
//   labels.tsv    node<TAB>class            (optional)
//   splits.tsv    node<TAB>train|val|test   (optional)
//   vocab.tsv     node|feature|class<TAB>name (optional; fixes id order)
// `#` lines and blank lines are skipped. Without vocab.tsv, ids follow
// first-seen order (nodes over edges.tsv then features.tsv). Errors carry
// file name and line number.
GraphDataset parse_graph_dir(const std::filesystem::path& dir, const ParseOptions& options = {});

// Writes the files above (vocab.tsv always; labels.tsv and splits.tsv only
// when present) in id order.
void write_graph_dir(const std::filesystem::path& dir, const Graph& g, const NameTable& names,
                     const gnn::Split* split = nullptr);

struct TransformedDataset {
  TransformedGraph graph;
  NameTable names;  // node names cover graph and feature nodes
  std::optional<gnn::Split> split;
};

// Names for the feature nodes of tg: "x<rank+1>", prefixed with '_' until
// distinct from every graph-node name.
std::vector<std::string> feature_node_names(const TransformedGraph& tg, const NameTable& graph_names);

// Writes the base graph files plus node_kinds.tsv, feature_provenance.tsv and
// x_star.tsv (node<TAB>feature<TAB>value, nonzeros only, 17 significant
// digits). `graph_names` names the graph nodes only, or all nodes.
void write_transformed(const std::filesystem::path& dir, const TransformedGraph& tg, const NameTable& graph_names,
                       const gnn::Split* split = nullptr);

TransformedDataset read_transformed(const std::filesystem::path& dir);

bool is_transformed_dir(const std::filesystem::path& dir);

// `%.17g`.
std::string format_real(double x);

}  // namespace graphite::io
