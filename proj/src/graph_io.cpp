#include "graphite/graph_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "graphite/errors.hpp"

namespace graphite::io {

namespace fs = std::filesystem;

namespace {

struct Record {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

// Calls f for every data line of `path` (comments and blank lines skipped).
void for_each_record(const fs::path& path, const std::function<void(const Record&)>& f) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  Record rec;
  while (std::getline(in, line)) {
    ++rec.line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    rec.fields = split_tabs(line);
    f(rec);
  }
}

[[noreturn]] void fail(const fs::path& path, std::size_t line, const std::string& what) {
  throw DataError(path.filename().string() + ":" + std::to_string(line) + ": " + what);
}

void expect_fields(const fs::path& path, const Record& rec, std::size_t lo, std::size_t hi) {
  const auto n = rec.fields.size();
  if (n < lo || n > hi) {
    std::ostringstream msg;
    msg << "expected " << lo;
    if (hi != lo) msg << "-" << hi;
    msg << " tab-separated fields, found " << n;
    fail(path, rec.line, msg.str());
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (rec.fields[i].empty()) fail(path, rec.line, "empty field " + std::to_string(i + 1));
  }
}

class Interner {
 public:
  explicit Interner(std::vector<std::string>& names) : names_(names) {
    for (std::size_t i = 0; i < names_.size(); ++i) ids_.emplace(names_[i], static_cast<std::uint32_t>(i));
  }

  std::optional<std::uint32_t> find(const std::string& name) const {
    const auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t intern(const std::string& name) {
    if (const auto id = find(name)) return *id;
    const auto id = static_cast<std::uint32_t>(names_.size());
    names_.push_back(name);
    ids_.emplace(name, id);
    return id;
  }

 private:
  std::vector<std::string>& names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

double parse_value(const fs::path& path, std::size_t line, const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') fail(path, line, "not a number: " + text);
  return v;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

NameTable complete_names(const Graph& g, NameTable names) {
  const auto fill = [](std::vector<std::string>& v, std::size_t n, const char* prefix) {
    if (v.size() > n) v.resize(n);
    for (std::size_t i = v.size(); i < n; ++i) v.push_back(prefix + std::to_string(i));
  };
  fill(names.nodes, g.num_nodes(), "v");
  fill(names.features, g.num_features(), "f");
  fill(names.classes, g.num_classes(), "c");
  return names;
}

}  // namespace

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

GraphDataset parse_graph_dir(const fs::path& dir, const ParseOptions& options) {
  GraphDataset ds;
  auto& names = ds.names;
  const auto vocab_path = dir / "vocab.tsv";
  const bool closed = fs::exists(vocab_path);
  if (closed) {
    std::unordered_set<std::string> seen[3];
    for_each_record(vocab_path, [&](const Record& rec) {
      expect_fields(vocab_path, rec, 2, 2);
      const auto& kind = rec.fields[0];
      const auto& name = rec.fields[1];
      const int slot = kind == "node" ? 0 : kind == "feature" ? 1 : kind == "class" ? 2 : -1;
      if (slot < 0) fail(vocab_path, rec.line, "unknown vocabulary kind '" + kind + "'");
      if (!seen[slot].insert(name).second) fail(vocab_path, rec.line, "duplicate " + kind + " name '" + name + "'");
      (slot == 0 ? names.nodes : slot == 1 ? names.features : names.classes).push_back(name);
    });
  }
  Interner nodes(names.nodes);
  Interner features(names.features);
  Interner classes(names.classes);
  const auto node_id = [&](const fs::path& path, const Record& rec, const std::string& name, bool may_add) {
    if (may_add && !closed) return nodes.intern(name);
    const auto id = nodes.find(name);
    if (!id) fail(path, rec.line, "unknown node name '" + name + "'");
    return *id;
  };

  GraphInput in;
  const auto edges_path = dir / "edges.tsv";
  if (!fs::exists(edges_path)) throw DataError("missing " + edges_path.string());
  for_each_record(edges_path, [&](const Record& rec) {
    expect_fields(edges_path, rec, 2, 2);
    const auto u = node_id(edges_path, rec, rec.fields[0], true);
    const auto v = node_id(edges_path, rec, rec.fields[1], true);
    in.edges.emplace_back(u, v);
  });

  const auto features_path = dir / "features.tsv";
  if (!fs::exists(features_path)) throw DataError("missing " + features_path.string());
  for_each_record(features_path, [&](const Record& rec) {
    expect_fields(features_path, rec, 2, 3);
    const auto u = node_id(features_path, rec, rec.fields[0], true);
    double value = 1.0;
    if (rec.fields.size() == 3) {
      value = parse_value(features_path, rec.line, rec.fields[2]);
      if (options.binarize_threshold) {
        value = value > *options.binarize_threshold ? 1.0 : 0.0;
      } else if (value != 0.0 && value != 1.0) {
        fail(features_path, rec.line,
             "value " + rec.fields[2] + ": binary features required (see --binarize-threshold)");
      }
    }
    if (value == 0.0) return;
    std::uint32_t k = 0;
    if (closed) {
      const auto id = features.find(rec.fields[1]);
      if (!id) fail(features_path, rec.line, "unknown feature name '" + rec.fields[1] + "'");
      k = *id;
    } else {
      k = features.intern(rec.fields[1]);
    }
    in.features.push_back({u, k, 1.0});
  });

  const auto labels_path = dir / "labels.tsv";
  std::vector<std::optional<ClassId>> labels;
  if (fs::exists(labels_path)) {
    labels.assign(names.nodes.size(), std::nullopt);
    for_each_record(labels_path, [&](const Record& rec) {
      expect_fields(labels_path, rec, 2, 2);
      const auto u = node_id(labels_path, rec, rec.fields[0], false);
      std::uint32_t c = 0;
      if (closed) {
        const auto id = classes.find(rec.fields[1]);
        if (!id) fail(labels_path, rec.line, "unknown class name '" + rec.fields[1] + "'");
        c = *id;
      } else {
        c = classes.intern(rec.fields[1]);
      }
      if (labels[u] && *labels[u] != c) fail(labels_path, rec.line, "conflicting labels for '" + rec.fields[0] + "'");
      labels[u] = c;
    });
  }

  const auto splits_path = dir / "splits.tsv";
  if (fs::exists(splits_path)) {
    gnn::Split split;
    std::vector<bool> assigned(names.nodes.size(), false);
    for_each_record(splits_path, [&](const Record& rec) {
      expect_fields(splits_path, rec, 2, 2);
      const auto u = node_id(splits_path, rec, rec.fields[0], false);
      const auto& part = rec.fields[1];
      if (assigned[u]) fail(splits_path, rec.line, "node '" + rec.fields[0] + "' assigned twice");
      assigned[u] = true;
      if (part == "train") {
        split.train.push_back(u);
      } else if (part == "val") {
        split.val.push_back(u);
      } else if (part == "test") {
        split.test.push_back(u);
      } else {
        fail(splits_path, rec.line, "unknown split '" + part + "' (expected train, val or test)");
      }
    });
    for (auto* p : {&split.train, &split.val, &split.test}) std::sort(p->begin(), p->end());
    ds.split = std::move(split);
  }

  in.num_nodes = names.nodes.size();
  in.num_features = names.features.size();
  in.num_classes = names.classes.size();
  in.labels = std::move(labels);
  ds.graph = Graph::build(in, &ds.stats);
  return ds;
}

void write_graph_dir(const fs::path& dir, const Graph& g, const NameTable& given, const gnn::Split* split) {
  fs::create_directories(dir);
  const auto names = complete_names(g, given);
  {
    auto out = open_out(dir / "vocab.tsv");
    for (const auto& n : names.nodes) out << "node\t" << n << '\n';
    for (const auto& n : names.features) out << "feature\t" << n << '\n';
    for (const auto& n : names.classes) out << "class\t" << n << '\n';
  }
  {
    auto out = open_out(dir / "edges.tsv");
    for (const auto& e : g.edges()) out << names.nodes[e.u] << '\t' << names.nodes[e.v] << '\n';
  }
  {
    auto out = open_out(dir / "features.tsv");
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      for (const auto k : g.features(u)) out << names.nodes[u] << '\t' << names.features[k] << '\n';
    }
  }
  const auto labels_path = dir / "labels.tsv";
  if (g.has_labels()) {
    auto out = open_out(labels_path);
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      if (const auto c = g.label(u)) out << names.nodes[u] << '\t' << names.classes[*c] << '\n';
    }
  } else {
    fs::remove(labels_path);
  }
  const auto splits_path = dir / "splits.tsv";
  if (split) {
    std::vector<const char*> part(g.num_nodes(), nullptr);
    for (const auto u : split->train) part.at(u) = "train";
    for (const auto u : split->val) part.at(u) = "val";
    for (const auto u : split->test) part.at(u) = "test";
    auto out = open_out(splits_path);
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      if (part[u]) out << names.nodes[u] << '\t' << part[u] << '\n';
    }
  } else {
    fs::remove(splits_path);
  }
}

std::vector<std::string> feature_node_names(const TransformedGraph& tg, const NameTable& graph_names) {
  std::unordered_set<std::string> taken(graph_names.nodes.begin(),
                                        graph_names.nodes.begin() +
                                            static_cast<std::ptrdiff_t>(std::min(graph_names.nodes.size(),
                                                                                 tg.num_graph_nodes())));
  std::vector<std::string> out;
  for (std::size_t r = 0; r < tg.num_feature_nodes(); ++r) {
    std::string name = "x" + std::to_string(r + 1);
    while (taken.count(name)) name.insert(name.begin(), '_');
    taken.insert(name);
    out.push_back(std::move(name));
  }
  return out;
}

void write_transformed(const fs::path& dir, const TransformedGraph& tg, const NameTable& graph_names,
                       const gnn::Split* split) {
  const auto& g = tg.base();
  NameTable names = graph_names;
  if (names.nodes.size() != g.num_nodes()) {
    names.nodes.resize(std::min(names.nodes.size(), tg.num_graph_nodes()));
    for (std::size_t u = names.nodes.size(); u < tg.num_graph_nodes(); ++u) names.nodes.push_back("v" + std::to_string(u));
    for (auto& n : feature_node_names(tg, names)) names.nodes.push_back(std::move(n));
  }
  names = complete_names(g, std::move(names));
  write_graph_dir(dir, g, names, split);
  {
    auto out = open_out(dir / "node_kinds.tsv");
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      out << names.nodes[u] << '\t' << (tg.is_feature_node(u) ? "feature_node" : "graph_node") << '\n';
    }
  }
  {
    auto out = open_out(dir / "feature_provenance.tsv");
    for (auto u = static_cast<NodeId>(tg.num_graph_nodes()); u < g.num_nodes(); ++u) {
      out << names.nodes[u] << '\t' << names.features[tg.feature_of(u)] << '\n';
    }
  }
  {
    auto out = open_out(dir / "x_star.tsv");
    const auto& x = tg.x_star();
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      const auto row = x.row(u);
      for (std::size_t i = 0; i < row.size(); ++i) {
        out << names.nodes[u] << '\t' << names.features[row.cols[i]] << '\t' << format_real(row.vals[i]) << '\n';
      }
    }
  }
}

bool is_transformed_dir(const fs::path& dir) { return fs::exists(dir / "node_kinds.tsv"); }

TransformedDataset read_transformed(const fs::path& dir) {
  auto ds = parse_graph_dir(dir);
  const auto& names = ds.names;
  const auto n = ds.graph.num_nodes();
  std::unordered_map<std::string, NodeId> node_ids;
  for (NodeId u = 0; u < n; ++u) node_ids.emplace(names.nodes[u], u);
  std::unordered_map<std::string, FeatureId> feature_ids;
  for (FeatureId k = 0; k < names.features.size(); ++k) feature_ids.emplace(names.features[k], k);
  const auto lookup_node = [&](const fs::path& path, const Record& rec, const std::string& name) {
    const auto it = node_ids.find(name);
    if (it == node_ids.end()) fail(path, rec.line, "unknown node name '" + name + "'");
    return it->second;
  };
  const auto lookup_feature = [&](const fs::path& path, const Record& rec, const std::string& name) {
    const auto it = feature_ids.find(name);
    if (it == feature_ids.end()) fail(path, rec.line, "unknown feature name '" + name + "'");
    return it->second;
  };

  const auto kinds_path = dir / "node_kinds.tsv";
  std::vector<std::optional<NodeKind>> kinds(n);
  for_each_record(kinds_path, [&](const Record& rec) {
    expect_fields(kinds_path, rec, 2, 2);
    const auto u = lookup_node(kinds_path, rec, rec.fields[0]);
    if (rec.fields[1] == "graph_node") {
      kinds[u] = NodeKind::graph_node;
    } else if (rec.fields[1] == "feature_node") {
      kinds[u] = NodeKind::feature_node;
    } else {
      fail(kinds_path, rec.line, "unknown node kind '" + rec.fields[1] + "'");
    }
  });
  std::vector<NodeKind> kind_list;
  for (NodeId u = 0; u < n; ++u) {
    if (!kinds[u]) throw DataError("node_kinds.tsv: no kind for node '" + names.nodes[u] + "'");
    kind_list.push_back(*kinds[u]);
  }
  const auto num_graph = static_cast<std::size_t>(
      std::find(kind_list.begin(), kind_list.end(), NodeKind::feature_node) - kind_list.begin());

  const auto prov_path = dir / "feature_provenance.tsv";
  std::vector<std::optional<FeatureId>> provenance(n - num_graph);
  for_each_record(prov_path, [&](const Record& rec) {
    expect_fields(prov_path, rec, 2, 2);
    const auto u = lookup_node(prov_path, rec, rec.fields[0]);
    if (u < num_graph) fail(prov_path, rec.line, "'" + rec.fields[0] + "' is not a feature node");
    provenance[u - num_graph] = lookup_feature(prov_path, rec, rec.fields[1]);
  });
  std::vector<FeatureId> feature_of;
  for (std::size_t i = 0; i < provenance.size(); ++i) {
    if (!provenance[i]) throw DataError("feature_provenance.tsv: no feature for '" + names.nodes[num_graph + i] + "'");
    feature_of.push_back(*provenance[i]);
  }

  const auto x_path = dir / "x_star.tsv";
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n);
  for_each_record(x_path, [&](const Record& rec) {
    expect_fields(x_path, rec, 3, 3);
    const auto u = lookup_node(x_path, rec, rec.fields[0]);
    const auto k = lookup_feature(x_path, rec, rec.fields[1]);
    rows[u].emplace_back(k, parse_value(x_path, rec.line, rec.fields[2]));
  });
  SparseRows x_star(names.features.size());
  for (NodeId u = 0; u < n; ++u) {
    auto& r = rows[u];
    std::sort(r.begin(), r.end());
    for (std::size_t i = 1; i < r.size(); ++i) {
      if (r[i].first == r[i - 1].first) {
        throw DataError("x_star.tsv: duplicate entry for node '" + names.nodes[u] + "', feature '" +
                        names.features[r[i].first] + "'");
      }
    }
    x_star.push_row(std::move(r));
  }

  TransformedDataset out;
  out.graph = TransformedGraph::from_parts(std::move(ds.graph), std::move(kind_list), std::move(feature_of),
                                           std::move(x_star));
  out.names = std::move(ds.names);
  out.split = std::move(ds.split);
  return out;
}

}  // namespace graphite::io
