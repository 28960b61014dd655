#include "graphite/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "graphite/errors.hpp"

namespace graphite::gnn {

namespace {

std::string real17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<ClassId> targets_of(const Graph& g, std::span<const NodeId> nodes) {
  std::vector<ClassId> t;
  t.reserve(nodes.size());
  for (const auto u : nodes) {
    const auto c = g.label(u);
    if (!c) throw DataError("missing label for node " + std::to_string(u));
    t.push_back(*c);
  }
  return t;
}

}  // namespace

Split random_split(const Graph& g, double train_ratio, double val_ratio, double test_ratio, std::uint64_t seed) {
  if (train_ratio < 0 || val_ratio < 0 || test_ratio < 0 || train_ratio + val_ratio + test_ratio > 1.0 + 1e-12) {
    throw ConfigError("split ratios must be non-negative and sum to at most 1");
  }
  std::vector<NodeId> labeled;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    if (g.label(u)) labeled.push_back(u);
  }
  std::mt19937_64 rng(seed);
  // Fisher-Yates with the portable uniform draw.
  for (std::size_t i = labeled.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(labeled[i - 1], labeled[std::min(j, i - 1)]);
  }
  const auto n = static_cast<double>(labeled.size());
  const auto n_train = static_cast<std::size_t>(std::floor(train_ratio * n));
  const auto n_val = static_cast<std::size_t>(std::floor(val_ratio * n));
  const auto n_test = std::min(labeled.size() - n_train - n_val, static_cast<std::size_t>(std::floor(test_ratio * n + 0.5)));
  Split s;
  s.train.assign(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(labeled.begin() + static_cast<std::ptrdiff_t>(n_train),
               labeled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(labeled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                labeled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val + n_test));
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

void validate_split(const Split& split, const Graph& g, std::size_t num_graph_nodes) {
  std::vector<bool> seen(num_graph_nodes, false);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (const auto u : *part) {
      if (u >= num_graph_nodes) throw DataError("split names node " + std::to_string(u) + ", not a graph node");
      if (!g.label(u)) throw DataError("split names unlabeled node " + std::to_string(u));
      if (seen[u]) throw DataError("node " + std::to_string(u) + " appears in more than one split");
      seen[u] = true;
    }
  }
}

void Adam::step(ModelParams& params, const ModelParams& grad) {
  auto p = params.tensors();
  const auto g = grad.tensors();
  if (m_.empty()) {
    for (const auto* t : p) {
      m_.push_back(Matrix::Zero(t->rows(), t->cols()));
      v_.push_back(Matrix::Zero(t->rows(), t->cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * *g[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g[i]->cwiseProduct(*g[i]);
    const Matrix m_hat = m_[i] / c1;
    const Matrix v_hat = v_[i] / c2;
    p[i]->array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + epsilon_);
  }
}

std::string TrainReport::to_text() const {
  std::ostringstream out;
  out << "steps " << train_loss.size() << '\n';
  out << "best_step " << best_step << '\n';
  out << "best_val_metric " << (best_val_metric ? real17(*best_val_metric) : "undefined") << '\n';
  out << "test_metric " << (test_metric ? real17(*test_metric) : "undefined") << '\n';
  out << "seconds " << real17(seconds) << '\n';
  for (std::size_t i = 0; i < train_loss.size(); ++i) out << "loss " << i + 1 << ' ' << real17(train_loss[i]) << '\n';
  for (const auto& [step, v] : val_metric) out << "val " << step << ' ' << real17(v) << '\n';
  return out.str();
}

TrainResult train(const TransformedGraph& tg, const Split& split, const GnnConfig& config) {
  config.validate();
  const auto& g = tg.base();
  if (split.train.empty()) throw DataError("empty train split");
  validate_split(split, g, tg.num_graph_nodes());
  if (config.metric == Metric::roc_auc && g.num_classes() != 2) {
    throw ConfigError("roc_auc requires exactly two classes");
  }

  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(config.seed);
  const auto graph = prepare(tg, config);
  Model current{config, ModelParams::initialize(tg.x_star().width(), g.num_classes(), config, rng)};
  check_shapes(graph, current.params, config);

  const auto train_targets = targets_of(g, split.train);
  Adam adam(config.learning_rate);
  TrainReport report;
  Model best = current;

  const auto evaluate_val = [&](std::size_t step) {
    if (split.val.empty()) return;
    const auto logits = forward(graph, current.params, config);
    const double metric = evaluate(logits, split.val, g, config.metric);
    report.val_metric.emplace_back(step, metric);
    if (!report.best_val_metric || metric > *report.best_val_metric) {
      report.best_val_metric = metric;
      report.best_step = step;
      best = current;
    }
  };

  evaluate_val(0);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const auto lg = loss_and_gradient(graph, current.params, config, split.train, train_targets, true, &rng);
    if (!std::isfinite(lg.loss)) {
      throw std::runtime_error("non-finite training loss at step " + std::to_string(step));
    }
    report.train_loss.push_back(lg.loss);
    adam.step(current.params, lg.grad);
    if (step % kEvalEvery == 0 || step == config.steps) evaluate_val(step);
  }
  if (split.val.empty()) {
    best = current;
    report.best_step = config.steps;
  }

  if (!split.test.empty()) {
    report.test_metric = evaluate(forward(graph, best.params, config), split.test, g, config.metric);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(best), std::move(report)};
}

std::vector<ClassId> argmax_rows(const Matrix& logits) {
  std::vector<ClassId> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<ClassId>(best);
  }
  return out;
}

std::vector<ClassId> predict(const Model& model, const TransformedGraph& tg) {
  return argmax_rows(forward(tg, model.params, model.config));
}

double accuracy(std::span<const ClassId> predicted, std::span<const ClassId> truth) {
  if (truth.empty()) throw DataError("empty evaluation set");
  if (predicted.size() != truth.size()) throw DataError("prediction and label counts differ");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double roc_auc(std::span<const double> scores, std::span<const ClassId> truth) {
  if (truth.empty()) throw DataError("empty evaluation set");
  if (scores.size() != truth.size()) throw DataError("score and label counts differ");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = mid;
    i = j;
  }
  double positives = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] > 1) throw DataError("roc_auc requires binary labels");
    if (truth[i] == 1) {
      positives += 1.0;
      rank_sum += rank[i];
    }
  }
  const double negatives = static_cast<double>(truth.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) throw DataError("roc_auc needs both classes present");
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

double evaluate(const Matrix& logits, std::span<const NodeId> nodes, const Graph& g, Metric metric) {
  if (nodes.empty()) throw DataError("empty evaluation set");
  const auto truth = targets_of(g, nodes);
  if (metric == Metric::roc_auc) {
    if (logits.cols() != 2) throw DataError("roc_auc requires exactly two classes");
    std::vector<double> scores;
    for (const auto u : nodes) scores.push_back(logits(u, 1));
    return roc_auc(scores, truth);
  }
  const auto all = argmax_rows(logits);
  std::vector<ClassId> predicted;
  for (const auto u : nodes) predicted.push_back(all[u]);
  return accuracy(predicted, truth);
}

}  // namespace graphite::gnn
