// graphite: transform, measure, verify, train and predict on TSV graph
// directories.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 verification failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "graphite/campaign.hpp"
#include "graphite/errors.hpp"
#include "graphite/graph_io.hpp"
#include "graphite/homophily.hpp"
#include "graphite/model_io.hpp"
#include "graphite/synthetic.hpp"
#include "graphite/trainer.hpp"
#include "graphite/transform.hpp"

namespace {

using namespace graphite;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
void parse_range(const std::string& text, T& lo, T& hi) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw UsageError("range must look like a..b, got '" + text + "'");
  try {
    if constexpr (std::is_floating_point_v<T>) {
      lo = std::stod(text.substr(0, dots));
      hi = std::stod(text.substr(dots + 2));
    } else {
      lo = static_cast<T>(std::stoull(text.substr(0, dots)));
      hi = static_cast<T>(std::stoull(text.substr(dots + 2)));
    }
  } catch (const std::exception&) {
    throw UsageError("bad range '" + text + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw DataError("cannot write " + path);
}

Aggregator parse_aggregator(const std::string& name) {
  if (name == "averaging") return Aggregator::averaging;
  if (name == "majority") return Aggregator::majority;
  throw UsageError("unknown aggregator '" + name + "'");
}

io::ParseOptions parse_options(const std::optional<double>& threshold) {
  io::ParseOptions o;
  o.binarize_threshold = threshold;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-node graph transformation, homophily metrics and gated GNN training"};
  app.require_subcommand(1);
  std::optional<double> binarize;

  auto* transform_cmd = app.add_subcommand("transform", "Add feature nodes and feature edges");
  std::string t_in, t_out, t_agg = "averaging";
  transform_cmd->add_option("in", t_in, "Graph directory")->required();
  transform_cmd->add_option("out", t_out, "Output directory")->required();
  transform_cmd->add_option("--aggregator", t_agg, "averaging or majority");
  transform_cmd->add_option("--binarize-threshold", binarize, "Map feature values > t to 1");

  auto* metrics_cmd = app.add_subcommand("metrics", "Print the homophily report");
  std::string m_in;
  bool m_transformed = false;
  metrics_cmd->add_option("in", m_in, "Graph directory")->required();
  metrics_cmd->add_flag("--transformed", m_transformed, "Input was written by `transform`");
  metrics_cmd->add_option("--binarize-threshold", binarize, "Map feature values > t to 1");

  auto* verify_cmd = app.add_subcommand("verify", "Randomized verification campaign");
  CampaignConfig cc;
  std::string v_nodes, v_degree, v_features, v_fpn, v_report, v_graph_dir, v_bundles;
  bool v_allow_homophilic = false;
  bool v_timings = false;
  verify_cmd->add_option("--graphs", cc.num_graphs, "Number of random graphs");
  verify_cmd->add_option("--seed", cc.seed, "Campaign seed");
  verify_cmd->add_option("--nodes", v_nodes, "Node-count range a..b");
  verify_cmd->add_option("--degree", v_degree, "Average-degree range a..b");
  verify_cmd->add_option("--features", v_features, "Feature-count range a..b");
  verify_cmd->add_option("--features-per-node", v_fpn, "Features-per-node range a..b");
  verify_cmd->add_flag("--allow-homophilic", v_allow_homophilic, "Keep draws failing the assumption gate");
  verify_cmd->add_option("--bundle-dir", v_bundles, "Directory for reproduction bundles");
  verify_cmd->add_option("--report", v_report, "Write the full report here");
  verify_cmd->add_flag("--timings", v_timings, "Include per-graph timings in the report");
  verify_cmd->add_option("--graph-dir", v_graph_dir, "Verify this single graph instead");

  auto* train_cmd = app.add_subcommand("train", "Train the gated GNN");
  std::string tr_in, tr_config, tr_model = "model.bin", tr_report = "train_report.txt", tr_agg = "averaging";
  bool tr_transform = false;
  train_cmd->add_option("in", tr_in, "Graph directory")->required();
  train_cmd->add_option("--config", tr_config, "key = value config file")->required();
  train_cmd->add_flag("--transform", tr_transform, "Apply the feature-node transform first");
  train_cmd->add_option("--aggregator", tr_agg, "averaging or majority");
  train_cmd->add_option("--model", tr_model, "Model output file");
  train_cmd->add_option("--report", tr_report, "Training report output file");
  train_cmd->add_option("--binarize-threshold", binarize, "Map feature values > t to 1");

  auto* predict_cmd = app.add_subcommand("predict", "Predict classes of graph nodes");
  std::string p_model, p_in, p_out, p_agg = "averaging";
  bool p_transform = false;
  predict_cmd->add_option("model", p_model, "Model file")->required();
  predict_cmd->add_option("in", p_in, "Graph directory")->required();
  predict_cmd->add_option("out", p_out, "Predictions file (node<TAB>class)")->required();
  predict_cmd->add_flag("--transform", p_transform, "Apply the feature-node transform first");
  predict_cmd->add_option("--aggregator", p_agg, "averaging or majority");
  predict_cmd->add_option("--binarize-threshold", binarize, "Map feature values > t to 1");

  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic heterophilic graph");
  SyntheticParams sp;
  std::string g_out;
  gen_cmd->add_option("out", g_out, "Output directory")->required();
  gen_cmd->add_option("--nodes", sp.num_nodes);
  gen_cmd->add_option("--classes", sp.num_classes);
  gen_cmd->add_option("--features", sp.num_features);
  gen_cmd->add_option("--features-per-node", sp.features_per_node);
  gen_cmd->add_option("--noise", sp.feature_noise, "Probability of drawing outside the class pool");
  gen_cmd->add_option("--degree", sp.avg_degree, "Average degree");
  gen_cmd->add_option("--p-cross", sp.p_cross, "Cross-class edge probability");
  gen_cmd->add_option("--seed", sp.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*transform_cmd) {
      const auto mode = parse_aggregator(t_agg);
      const auto data = io::parse_graph_dir(t_in, parse_options(binarize));
      TransformStats stats;
      const auto tg = graphite_transform(data.graph, mode, &stats);
      io::write_transformed(t_out, tg, data.names, data.split ? &*data.split : nullptr);
      std::cout << "feature_nodes " << tg.num_feature_nodes() << "\nfeature_edges " << tg.num_feature_edges()
                << "\nunused_features_dropped " << stats.unused_features_dropped << '\n';
    } else if (*metrics_cmd) {
      HomophilyReport report;
      if (m_transformed) {
        const auto data = io::read_transformed(m_in);
        if (data.graph.base().num_edges() == 0) throw DataError("no edges");
        report = full_report(data.graph);
      } else {
        const auto data = io::parse_graph_dir(m_in, parse_options(binarize));
        if (data.graph.num_edges() == 0) throw DataError("no edges");
        report = full_report(data.graph);
      }
      std::cout << report.to_text();
    } else if (*verify_cmd) {
      if (!v_nodes.empty()) parse_range(v_nodes, cc.min_nodes, cc.max_nodes);
      if (!v_degree.empty()) parse_range(v_degree, cc.min_avg_degree, cc.max_avg_degree);
      if (!v_features.empty()) parse_range(v_features, cc.min_features, cc.max_features);
      if (!v_fpn.empty()) parse_range(v_fpn, cc.min_features_per_node, cc.max_features_per_node);
      cc.force_heterophily = !v_allow_homophilic;
      cc.bundle_dir = v_bundles;
      if (const char* w = std::getenv("GRAPHITE_WORKERS")) {
        try {
          cc.workers = std::stoul(w);
        } catch (const std::exception&) {
          throw UsageError("GRAPHITE_WORKERS must be a positive integer");
        }
      }
      CampaignReport report;
      if (!v_graph_dir.empty()) {
        const auto data = io::parse_graph_dir(v_graph_dir, parse_options(binarize));
        auto r = verify_graph(data.graph);
        if (!r.passed()) {
          report.failed = 1;
          if (!v_bundles.empty()) {
            const auto dir = std::filesystem::path(v_bundles) / "graph_0";
            write_bundle(dir, data.graph, 0, r);
            report.bundles.push_back(dir);
          }
        }
        report.gated_out = r.gated_out ? 1 : 0;
        report.graphs.push_back(std::move(r));
      } else {
        report = run_campaign(cc);
      }
      const auto text = report.to_text(v_timings);
      if (!v_report.empty()) write_file(v_report, text);
      std::cout << "graphs " << report.graphs.size() << "\ngated_out " << report.gated_out << "\nfailed "
                << report.failed << '\n';
      if (!v_graph_dir.empty()) {
        const auto& r = report.graphs.front();
        std::cout << "hom_before " << io::format_real(r.hom_before) << "\nhom_graphite "
                  << io::format_real(r.hom_graphite) << "\nhom_nhb " << io::format_real(r.hom_nhb)
                  << "\ngraphite_nodes_added " << r.graphite_nodes_added << "\ngraphite_edges_added "
                  << r.graphite_edges_added << "\nnhb_edges_added " << r.nhb_edges_added << '\n';
      }
      if (!report.passed()) {
        for (const auto& r : report.graphs) {
          for (const auto& f : r.failures) std::cerr << "verify: graph " << r.index << ": " << f << '\n';
        }
        for (const auto& b : report.bundles) std::cerr << "verify: bundle written to " << b.string() << '\n';
        return kExitVerify;
      }
    } else if (*train_cmd) {
      const auto config = gnn::GnnConfig::parse(read_file(tr_config));
      const auto data = io::parse_graph_dir(tr_in, parse_options(binarize));
      const auto tg = tr_transform ? graphite_transform(data.graph, parse_aggregator(tr_agg))
                                   : TransformedGraph::identity(data.graph);
      const auto split = data.split ? *data.split : gnn::random_split(data.graph, 0.48, 0.32, 0.20, config.seed);
      const auto result = gnn::train(tg, split, config);
      gnn::save_model(tr_model, result.model);
      write_file(tr_report, result.report.to_text());
      std::cout << "best_step " << result.report.best_step << "\nbest_val_metric "
                << (result.report.best_val_metric ? io::format_real(*result.report.best_val_metric) : "undefined")
                << "\ntest_metric "
                << (result.report.test_metric ? io::format_real(*result.report.test_metric) : "undefined") << '\n';
    } else if (*predict_cmd) {
      const auto model = gnn::load_model(p_model);
      const auto data = io::parse_graph_dir(p_in, parse_options(binarize));
      const auto tg = p_transform ? graphite_transform(data.graph, parse_aggregator(p_agg))
                                  : TransformedGraph::identity(data.graph);
      const auto predicted = gnn::predict(model, tg);
      std::ostringstream out;
      for (NodeId u = 0; u < data.graph.num_nodes(); ++u) {
        const auto c = predicted[u];
        out << data.names.nodes[u] << '\t'
            << (c < data.names.classes.size() ? data.names.classes[c] : "c" + std::to_string(c)) << '\n';
      }
      write_file(p_out, out.str());
    } else if (*gen_cmd) {
      const auto g = generate_synthetic(sp);
      io::write_graph_dir(g_out, g, io::NameTable{});
      std::cout << "nodes " << g.num_nodes() << "\nedges " << g.num_edges() << "\nnnz " << g.nnz() << '\n';
    }
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data: " << e.what() << '\n';
    return kExitData;
  } catch (const UndefinedError& e) {
    std::cerr << "data: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "data: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
