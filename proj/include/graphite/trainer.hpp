#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "graphite/gnn.hpp"

namespace graphite::gnn {

// Transductive train/validation/test partition of labeled graph nodes.
struct Split {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
};

// Shuffles the labeled nodes of g and cuts them by the given ratios
// (sum <= 1); leftover nodes are left unassigned.
Split random_split(const Graph& g, double train_ratio, double val_ratio, double test_ratio, std::uint64_t seed);

// Throws DataError when the split overlaps, names an unlabeled node, or a
// node outside 0..num_graph_nodes-1.
void validate_split(const Split& split, const Graph& g, std::size_t num_graph_nodes);

// Adam with bias-corrected first and second moments.
class Adam {
 public:
  Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  void step(ModelParams& params, const ModelParams& grad);
  std::size_t steps_taken() const { return t_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double epsilon_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

struct Model {
  GnnConfig config;
  ModelParams params;
};

struct TrainReport {
  std::vector<double> train_loss;  // one per optimizer step
  std::vector<std::pair<std::size_t, double>> val_metric;  // (step, metric)
  std::size_t best_step = 0;
  std::optional<double> best_val_metric;
  std::optional<double> test_metric;  // at the best checkpoint
  double seconds = 0.0;

  std::string to_text() const;
};

struct TrainResult {
  Model model;  // best-validation parameters
  TrainReport report;
};

inline constexpr std::size_t kEvalEvery = 10;

// Full-batch training with Adam on the train nodes' cross-entropy. Validation
// is evaluated at step 0 and every kEvalEvery steps and at the end; the
// parameters with the best validation metric (earliest on ties) are kept.
// Throws DataError on an empty train split and std::runtime_error naming the
// step on a non-finite loss.
TrainResult train(const TransformedGraph& tg, const Split& split, const GnnConfig& config);

// Argmax of the logits per graph node; ties go to the lowest class id.
std::vector<ClassId> predict(const Model& model, const TransformedGraph& tg);
std::vector<ClassId> argmax_rows(const Matrix& logits);

double accuracy(std::span<const ClassId> predicted, std::span<const ClassId> truth);
// Rank-statistic ROC-AUC with mid-ranks for tied scores; truth must be 0/1.
double roc_auc(std::span<const double> scores, std::span<const ClassId> truth);

// Metric over `nodes` from graph-node logits. roc_auc uses the class-1 logit
// as score and requires two classes.
double evaluate(const Matrix& logits, std::span<const NodeId> nodes, const Graph& g, Metric metric);

}  // namespace graphite::gnn
