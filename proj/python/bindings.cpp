#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "graphite/campaign.hpp"
#include "graphite/errors.hpp"
#include "graphite/graph_io.hpp"
#include "graphite/homophily.hpp"
#include "graphite/synthetic.hpp"
#include "graphite/trainer.hpp"
#include "graphite/transform.hpp"

namespace py = pybind11;
using namespace graphite;

namespace {

Aggregator aggregator_from(const std::string& name) {
  if (name == "averaging") return Aggregator::averaging;
  if (name == "majority") return Aggregator::majority;
  throw ConfigError("unknown aggregator '" + name + "'");
}

Graph graph_from_lists(std::size_t num_nodes, std::size_t num_features,
                       const std::vector<std::pair<NodeId, NodeId>>& edges,
                       const std::vector<std::pair<NodeId, FeatureId>>& features,
                       const std::optional<std::vector<std::optional<ClassId>>>& labels, std::size_t num_classes) {
  GraphInput in;
  in.num_nodes = num_nodes;
  in.num_features = num_features;
  in.num_classes = num_classes;
  in.edges = edges;
  for (const auto& [u, k] : features) in.features.push_back({u, k, 1.0});
  if (labels) {
    in.labels = *labels;
  } else {
    in.labels.assign(num_nodes, std::nullopt);
  }
  return Graph::build(in);
}

Eigen::MatrixXd dense(const SparseRows& rows) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.num_rows()),
                                              static_cast<Eigen::Index>(rows.width()));
  for (std::size_t r = 0; r < rows.num_rows(); ++r) {
    const auto row = rows.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) out(static_cast<Eigen::Index>(r), row.cols[i]) = row.vals[i];
  }
  return out;
}

py::dict report_dict(const HomophilyReport& r) {
  py::dict d;
  d["share_hom"] = r.share_hom.value;
  d["feature_hom"] = r.feature_hom.value;
  d["edge_hom"] = r.edge_hom.value;
  d["adjusted_hom"] = r.adjusted_hom.value;
  d["num_nodes"] = r.num_nodes;
  d["num_edges"] = r.num_edges;
  d["num_features"] = r.num_features;
  return d;
}

py::dict theorem_dict(const TheoremReport& r) {
  py::dict d;
  d["hom_before"] = r.hom_before;
  d["hom_after"] = r.hom_after;
  d["nodes_added"] = r.nodes_added;
  d["edges_added"] = r.edges_added;
  d["bound_satisfied"] = r.bound_satisfied;
  d["homophily_increased"] = r.homophily_increased;
  d["assumptions_held"] = r.assumptions_held;
  d["violated_assumptions"] = r.violated_assumptions;
  d["failures"] = r.failures;
  return d;
}

std::vector<std::pair<NodeId, NodeId>> edge_pairs(const Graph& g) {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (const auto& e : g.edges()) out.emplace_back(e.u, e.v);
  return out;
}

}  // namespace

PYBIND11_MODULE(graphite, m) {
  m.doc() = "Feature-node graph transformation, homophily metrics and a gated GNN";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UndefinedError>(m, "UndefinedError", PyExc_ArithmeticError);

  py::class_<Graph>(m, "Graph")
      .def_property_readonly("num_nodes", &Graph::num_nodes)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def_property_readonly("num_features", &Graph::num_features)
      .def_property_readonly("num_classes", &Graph::num_classes)
      .def_property_readonly("nnz", &Graph::nnz)
      .def("edges", &edge_pairs)
      .def("features", [](const Graph& g, NodeId u) {
        if (u >= g.num_nodes()) throw py::index_error("node out of range");
        const auto f = g.features(u);
        return std::vector<FeatureId>(f.begin(), f.end());
      })
      .def("label", [](const Graph& g, NodeId u) {
        if (u >= g.num_nodes()) throw py::index_error("node out of range");
        return g.label(u);
      })
      .def("feature_matrix", [](const Graph& g) { return dense(g.feature_rows()); })
      .def("__eq__", [](const Graph& a, const Graph& b) { return a == b; });

  py::class_<TransformedGraph>(m, "TransformedGraph")
      .def_property_readonly("base", &TransformedGraph::base)
      .def_property_readonly("num_nodes", &TransformedGraph::num_nodes)
      .def_property_readonly("num_graph_nodes", &TransformedGraph::num_graph_nodes)
      .def_property_readonly("num_feature_nodes", &TransformedGraph::num_feature_nodes)
      .def_property_readonly("num_graph_edges", &TransformedGraph::num_graph_edges)
      .def_property_readonly("num_feature_edges", &TransformedGraph::num_feature_edges)
      .def("is_feature_node", &TransformedGraph::is_feature_node)
      .def("feature_of", [](const TransformedGraph& tg, NodeId u) {
        if (u < tg.num_graph_nodes() || u >= tg.num_nodes()) throw py::index_error("not a feature node");
        return tg.feature_of(u);
      })
      .def("x_star", [](const TransformedGraph& tg) { return dense(tg.x_star()); });

  m.def("graph_from_lists", &graph_from_lists, py::arg("num_nodes"), py::arg("num_features"), py::arg("edges"),
        py::arg("features"), py::arg("labels") = std::nullopt, py::arg("num_classes") = 0);
  m.def(
      "parse_graph_dir",
      [](const std::filesystem::path& dir, std::optional<double> threshold) {
        io::ParseOptions options;
        options.binarize_threshold = threshold;
        auto data = io::parse_graph_dir(dir, options);
        return py::make_tuple(std::move(data.graph), data.names.nodes, data.names.features, data.names.classes);
      },
      py::arg("path"), py::arg("binarize_threshold") = std::nullopt,
      "Returns (graph, node_names, feature_names, class_names).");

  m.def(
      "graphite_transform",
      [](const Graph& g, const std::string& aggregator) { return graphite_transform(g, aggregator_from(aggregator)); },
      py::arg("graph"), py::arg("aggregator") = "averaging");
  m.def("nhb_transform", &nhb_transform, py::arg("graph"));
  m.def("verify_two_hop", &verify_two_hop, py::arg("graph"), py::arg("transformed"));
  m.def("check_assumptions", &check_assumptions, py::arg("graph"));
  m.def("check_theorem_naive", [](const Graph& g) { return theorem_dict(check_theorem_naive(g)); });
  m.def("check_theorem_efficient", [](const Graph& g) { return theorem_dict(check_theorem_efficient(g)); });

  m.def("share_homophily", [](const Graph& g) { return share_homophily(g.feature_rows(), g.edges()); });
  m.def("feature_homophily", [](const Graph& g) { return feature_homophily(g.feature_rows(), g.edges()); });
  m.def("homophily_report", [](const Graph& g) { return report_dict(full_report(g)); });
  m.def("homophily_report", [](const TransformedGraph& tg) { return report_dict(full_report(tg)); });

  m.def(
      "generate_synthetic",
      [](std::size_t num_nodes, std::size_t num_classes, std::size_t num_features, std::size_t features_per_node,
         double feature_noise, double avg_degree, double p_cross, std::uint64_t seed) {
        SyntheticParams p;
        p.num_nodes = num_nodes;
        p.num_classes = num_classes;
        p.num_features = num_features;
        p.features_per_node = features_per_node;
        p.feature_noise = feature_noise;
        p.avg_degree = avg_degree;
        p.p_cross = p_cross;
        p.seed = seed;
        return generate_synthetic(p);
      },
      py::arg("num_nodes") = SyntheticParams{}.num_nodes, py::arg("num_classes") = SyntheticParams{}.num_classes,
      py::arg("num_features") = SyntheticParams{}.num_features,
      py::arg("features_per_node") = SyntheticParams{}.features_per_node,
      py::arg("feature_noise") = SyntheticParams{}.feature_noise,
      py::arg("avg_degree") = SyntheticParams{}.avg_degree, py::arg("p_cross") = SyntheticParams{}.p_cross,
      py::arg("seed") = SyntheticParams{}.seed);

  m.def(
      "run_campaign",
      [](std::size_t num_graphs, std::uint64_t seed, std::size_t min_nodes, std::size_t max_nodes,
         bool force_heterophily) {
        CampaignConfig c;
        c.num_graphs = num_graphs;
        c.seed = seed;
        c.min_nodes = min_nodes;
        c.max_nodes = max_nodes;
        c.force_heterophily = force_heterophily;
        const auto r = run_campaign(c);
        py::dict d;
        d["graphs"] = r.graphs.size();
        d["gated_out"] = r.gated_out;
        d["failed"] = r.failed;
        d["report"] = r.to_text();
        return d;
      },
      py::arg("num_graphs") = 100, py::arg("seed") = 1, py::arg("min_nodes") = CampaignConfig{}.min_nodes,
      py::arg("max_nodes") = CampaignConfig{}.max_nodes, py::arg("force_heterophily") = true);

  m.def(
      "train",
      [](const TransformedGraph& tg, const std::string& config_text, std::optional<std::vector<NodeId>> train,
         std::optional<std::vector<NodeId>> val, std::optional<std::vector<NodeId>> test) {
        const auto config = gnn::GnnConfig::parse(config_text);
        gnn::Split split;
        if (train) {
          split.train = *train;
          split.val = val.value_or(std::vector<NodeId>{});
          split.test = test.value_or(std::vector<NodeId>{});
        } else {
          split = gnn::random_split(tg.base(), 0.48, 0.32, 0.20, config.seed);
        }
        const auto result = gnn::train(tg, split, config);
        py::dict d;
        d["best_step"] = result.report.best_step;
        d["best_val_metric"] = result.report.best_val_metric;
        d["test_metric"] = result.report.test_metric;
        d["train_loss"] = result.report.train_loss;
        d["predictions"] = gnn::predict(result.model, tg);
        return d;
      },
      py::arg("transformed"), py::arg("config") = "", py::arg("train") = std::nullopt, py::arg("val") = std::nullopt,
      py::arg("test") = std::nullopt,
      "Trains on the given split (or a random 48/32/20 split) and returns the report with predictions.");
  m.def("identity_transform", &TransformedGraph::identity, py::arg("graph"));
}
