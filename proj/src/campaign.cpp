#include "graphite/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "graphite/errors.hpp"
#include "graphite/gnn.hpp"
#include "graphite/graph_io.hpp"
#include "graphite/homophily.hpp"
#include "graphite/synthetic.hpp"
#include "graphite/transform.hpp"

namespace graphite {

namespace {

constexpr double kOracleTolerance = 1e-12;

std::size_t uniform_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  const auto span = hi - lo + 1;
  return lo + std::min(span - 1, static_cast<std::size_t>(gnn::uniform01(rng) * static_cast<double>(span)));
}

using Dense = std::vector<std::vector<double>>;

double dense_share(const Dense& x, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  double total = 0.0;
  for (const auto& [u, v] : edges) {
    double best = 0.0;
    for (std::size_t k = 0; k < x[u].size(); ++k) best = std::max(best, std::min(x[u][k], x[v][k]));
    total += best;
  }
  return total / static_cast<double>(edges.size());
}

// Brute-force counterparts of both transforms, built from the dense feature
// matrix and explicit pair enumeration.
struct Oracle {
  std::size_t nhb_pairs = 0;
  std::optional<double> hom_before;
  std::optional<double> hom_nhb;
  std::optional<double> hom_graphite;
  std::size_t graphite_nodes = 0;
  std::size_t graphite_edges = 0;
};

Oracle brute_force(const Graph& g) {
  const auto n = g.num_nodes();
  const auto f = g.num_features();
  Dense x(n, std::vector<double>(f, 0.0));
  for (NodeId u = 0; u < n; ++u) {
    for (const auto k : g.features(u)) x[u][k] = 1.0;
  }
  std::set<std::pair<NodeId, NodeId>> adjacent;
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& e : g.edges()) {
    adjacent.emplace(e.u, e.v);
    edges.emplace_back(e.u, e.v);
  }

  Oracle o;
  if (!edges.empty()) o.hom_before = dense_share(x, edges);

  auto boosted = edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      bool share = false;
      for (std::size_t k = 0; k < f && !share; ++k) share = x[u][k] == 1.0 && x[v][k] == 1.0;
      if (share && !adjacent.count({u, v})) {
        ++o.nhb_pairs;
        boosted.emplace_back(u, v);
      }
    }
  }
  if (!boosted.empty()) o.hom_nhb = dense_share(x, boosted);

  // Feature node per used feature, ids in feature order after graph nodes.
  Dense xs = x;
  auto star_edges = edges;
  for (std::size_t k = 0; k < f; ++k) {
    std::vector<NodeId> holders;
    for (NodeId u = 0; u < n; ++u) {
      if (x[u][k] == 1.0) holders.push_back(u);
    }
    if (holders.empty()) continue;
    const auto node = static_cast<NodeId>(xs.size());
    std::vector<double> row(f, 0.0);
    for (const auto u : holders) {
      for (std::size_t j = 0; j < f; ++j) row[j] += x[u][j];
      star_edges.emplace_back(u, node);
    }
    for (auto& r : row) r /= static_cast<double>(holders.size());
    xs.push_back(std::move(row));
    ++o.graphite_nodes;
    o.graphite_edges += holders.size();
  }
  if (!star_edges.empty()) o.hom_graphite = dense_share(xs, star_edges);
  return o;
}

bool close(double a, std::optional<double> b) {
  if (!b) return std::isnan(a);
  return std::abs(a - *b) <= kOracleTolerance;
}

std::string real17(double x) { return io::format_real(x); }

}  // namespace

void CampaignConfig::validate() const {
  if (num_graphs == 0) throw ConfigError("num_graphs must be positive");
  if (min_nodes < 2 || min_nodes > max_nodes) throw ConfigError("node range must satisfy 2 <= min <= max");
  if (!(min_avg_degree >= 0.0) || min_avg_degree > max_avg_degree) {
    throw ConfigError("degree range must satisfy 0 <= min <= max");
  }
  if (min_features == 0 || min_features > max_features) throw ConfigError("feature range must satisfy 1 <= min <= max");
  if (min_features_per_node == 0 || min_features_per_node > max_features_per_node) {
    throw ConfigError("features-per-node range must satisfy 1 <= min <= max");
  }
  if (workers == 0) throw ConfigError("workers must be positive");
}

std::uint64_t graph_seed(std::uint64_t campaign_seed, std::size_t index) {
  // splitmix64 finalizer over the combined pair
  std::uint64_t z = campaign_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Graph draw_campaign_graph(const CampaignConfig& c, std::mt19937_64& rng) {
  GraphInput in;
  const auto n = uniform_int(rng, c.min_nodes, c.max_nodes);
  in.num_nodes = n;
  const auto f = uniform_int(rng, std::min(c.min_features, n), std::min(c.max_features, n));
  in.num_features = f;
  in.num_classes = 0;
  in.labels.assign(n, std::nullopt);

  const double degree = c.min_avg_degree + gnn::uniform01(rng) * (c.max_avg_degree - c.min_avg_degree);
  const auto target = std::min(n * (n - 1) / 2, static_cast<std::size_t>(std::llround(degree * static_cast<double>(n) / 2.0)));
  std::set<std::pair<NodeId, NodeId>> edges;
  while (edges.size() < target) {
    const auto u = static_cast<NodeId>(uniform_int(rng, 0, n - 1));
    const auto v = static_cast<NodeId>(uniform_int(rng, 0, n - 1));
    if (u != v) edges.emplace(std::min(u, v), std::max(u, v));
  }
  in.edges.assign(edges.begin(), edges.end());

  for (NodeId u = 0; u < n; ++u) {
    const auto want = std::min(f, uniform_int(rng, c.min_features_per_node, c.max_features_per_node));
    std::set<FeatureId> chosen;
    while (chosen.size() < want) chosen.insert(static_cast<FeatureId>(uniform_int(rng, 0, f - 1)));
    for (const auto k : chosen) in.features.push_back({u, k, 1.0});
  }
  return Graph::build(in);
}

GraphResult verify_graph(const Graph& g) {
  GraphResult r;
  r.num_nodes = g.num_nodes();
  r.num_edges = g.num_edges();
  r.num_features = g.num_features();
  r.nnz = g.nnz();
  r.gated_out = !check_assumptions(g).empty();

  const auto naive = check_theorem_naive(g);
  const auto efficient = check_theorem_efficient(g);
  for (const auto& f : naive.failures) r.failures.push_back("nhb: " + f);
  for (const auto& f : efficient.failures) r.failures.push_back("graphite: " + f);
  r.hom_before = efficient.hom_before;
  r.hom_graphite = efficient.hom_after;
  r.hom_nhb = naive.hom_after;
  r.graphite_nodes_added = efficient.nodes_added;
  r.graphite_edges_added = efficient.edges_added;
  r.nhb_edges_added = naive.edges_added;

  if (g.nnz() > 0) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto tg = graphite_transform(g);
    const auto t1 = std::chrono::steady_clock::now();
    if (tg.base().num_edges() > 0) (void)share_homophily(tg.x_star(), tg.base().edges());
    const auto t2 = std::chrono::steady_clock::now();
    r.transform_seconds = std::chrono::duration<double>(t1 - t0).count();
    r.metric_seconds = std::chrono::duration<double>(t2 - t1).count();
    if (!verify_two_hop(g, tg)) r.failures.push_back("two-hop witness missing");
  }

  const auto o = brute_force(g);
  if (o.nhb_pairs != naive.edges_added) {
    r.failures.push_back("nhb edge count " + std::to_string(naive.edges_added) + " != oracle " +
                         std::to_string(o.nhb_pairs));
  }
  if (!close(naive.hom_before, o.hom_before)) r.failures.push_back("share_hom before disagrees with dense oracle");
  if (!close(naive.hom_after, o.hom_nhb)) r.failures.push_back("share_hom after nhb disagrees with dense oracle");
  if (g.nnz() > 0) {
    if (!close(efficient.hom_after, o.hom_graphite)) {
      r.failures.push_back("share_hom after graphite disagrees with dense oracle");
    }
    if (efficient.nodes_added != o.graphite_nodes || efficient.edges_added != o.graphite_edges) {
      r.failures.push_back("graphite node/edge counts disagree with oracle");
    }
  }
  return r;
}

void write_bundle(const std::filesystem::path& dir, const Graph& g, std::uint64_t seed, const GraphResult& result) {
  io::write_graph_dir(dir, g, io::NameTable{});
  std::ofstream out(dir / "seed.txt");
  out << "graph_seed " << seed << '\n' << "graph_index " << result.index << '\n';
  for (const auto& f : result.failures) out << "failure " << f << '\n';
  if (!out) throw DataError("cannot write reproduction bundle in " + dir.string());
}

CampaignReport run_campaign(const CampaignConfig& config) {
  config.validate();
  CampaignReport report;
  report.graphs.resize(config.num_graphs);
  std::vector<std::optional<Graph>> failing(config.num_graphs);

  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < config.num_graphs; i = next++) {
      const auto seed = graph_seed(config.seed, i);
      std::mt19937_64 rng(seed);
      Graph g = draw_campaign_graph(config, rng);
      if (config.force_heterophily) {
        for (std::size_t attempt = 1; attempt < kMaxGenerationAttempts && !check_assumptions(g).empty(); ++attempt) {
          g = draw_campaign_graph(config, rng);
        }
      }
      auto r = verify_graph(g);
      r.index = i;
      r.seed = seed;
      if (!r.passed()) failing[i] = std::move(g);
      report.graphs[i] = std::move(r);
    }
  };
  const auto workers = std::min(config.workers, config.num_graphs);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (const auto& r : report.graphs) {
    if (r.gated_out) ++report.gated_out;
    if (r.passed()) continue;
    ++report.failed;
    if (!config.bundle_dir.empty()) {
      const auto dir = config.bundle_dir / ("graph_" + std::to_string(r.index));
      write_bundle(dir, *failing[r.index], r.seed, r);
      report.bundles.push_back(dir);
    }
  }
  return report;
}

std::string CampaignReport::to_text(bool include_timings) const {
  std::ostringstream out;
  out << "graphs " << graphs.size() << '\n';
  out << "gated_out " << gated_out << '\n';
  out << "failed " << failed << '\n';
  out << "passed " << graphs.size() - failed << '\n';
  double transform_total = 0.0;
  double metric_total = 0.0;
  for (const auto& r : graphs) {
    out << "graph " << r.index << " seed " << r.seed << " nodes " << r.num_nodes << " edges " << r.num_edges
        << " features " << r.num_features << " nnz " << r.nnz << " gate " << (r.gated_out ? "out" : "pass")
        << " hom_before " << real17(r.hom_before) << " hom_graphite " << real17(r.hom_graphite) << " hom_nhb "
        << real17(r.hom_nhb) << " graphite_nodes_added " << r.graphite_nodes_added << " graphite_edges_added "
        << r.graphite_edges_added << " nhb_edges_added " << r.nhb_edges_added << " status "
        << (r.passed() ? "ok" : "FAIL");
    if (include_timings) {
      out << " transform_seconds " << real17(r.transform_seconds) << " metric_seconds " << real17(r.metric_seconds);
    }
    out << '\n';
    for (const auto& f : r.failures) out << "failure " << r.index << ' ' << f << '\n';
    transform_total += r.transform_seconds;
    metric_total += r.metric_seconds;
  }
  if (include_timings) {
    out << "transform_seconds_total " << real17(transform_total) << '\n';
    out << "metric_seconds_total " << real17(metric_total) << '\n';
  }
  for (const auto& b : bundles) out << "bundle " << b.string() << '\n';
  return out.str();
}

}  // namespace graphite
