#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "graphite/autodiff.hpp"
#include "graphite/transform.hpp"

namespace graphite::gnn {

using ad::Matrix;

// Input rows used for graph nodes. Feature-node rows always come from the
// transform.
enum class FeatureMode {
  original,
  zeros,       // graph-node rows replaced by zeros
  normalized,  // graph-node rows scaled to unit L1 norm
};

enum class Metric { accuracy, roc_auc };

struct GnnConfig {
  std::size_t num_layers = 8;
  std::size_t hidden_dim = 512;
  double w0 = 1.0;   // self-loop weight
  double wX = 0.1;   // feature-edge weight; graph edges weigh 1
  double tau = 1.0;  // gating temperature
  double dropout = 0.2;
  double learning_rate = 3e-5;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  FeatureMode feature_mode = FeatureMode::original;
  Metric metric = Metric::accuracy;

  // Throws ConfigError on an out-of-range field. wX = 0 is admitted only
  // when allow_zero_feature_weight is set.
  void validate(bool allow_zero_feature_weight = false) const;

  // Flat `key = value` text, one field per line.
  std::string to_text() const;
  // Parses `key = value` lines; unknown keys and bad values throw
  // ConfigError. Blank lines and `#` comments are ignored. Missing keys keep
  // their defaults.
  static GnnConfig parse(const std::string& text);
};

std::string to_string(FeatureMode mode);
std::string to_string(Metric metric);

struct LayerParams {
  Matrix gate_a;  // 1 × 2m
  Matrix gate_b;  // 1 × 1
  Matrix mlp_w1;  // m × m
  Matrix mlp_b1;  // 1 × m
  Matrix mlp_w2;  // m × m
  Matrix mlp_b2;  // 1 × m
};

inline constexpr double kGateBiasInit = 1.0;

struct ModelParams {
  Matrix input_w;  // |X| × m
  Matrix input_b;  // 1 × m
  std::vector<LayerParams> layers;
  Matrix head_w;  // m × C
  Matrix head_b;  // 1 × C

  // Affine weights uniform in ±1/√fan_in, biases zero, gate vectors zero,
  // gate biases kGateBiasInit.
  static ModelParams initialize(std::size_t input_dim, std::size_t num_classes, const GnnConfig& config,
                                std::mt19937_64& rng);
  // Same shapes, all zeros.
  ModelParams zeros_like() const;

  // Every tensor in declaration order.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  std::size_t num_scalars() const;

  std::size_t input_dim() const { return static_cast<std::size_t>(input_w.rows()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(input_w.cols()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(head_w.cols()); }
};

// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);

// Graph node: w0 + #graph neighbors + wX·#feature neighbors.
// Feature node: w0 + wX·#graph neighbors.
std::vector<double> weighted_degrees(const TransformedGraph& tg, double w0, double wX);

// tanh((aᵀ(h_u ‖ h_v) + b) / tau).
double gate(std::span<const double> h_u, std::span<const double> h_v, std::span<const double> a, double b,
            double tau);

// One weighted, gated message into `target`. The gate is evaluated on
// (gate_first ‖ gate_second); for feature edges that is always
// (graph node ‖ feature node), whichever end receives the message.
struct Message {
  NodeId target = 0;
  NodeId source = 0;
  NodeId gate_first = 0;
  NodeId gate_second = 0;
  double coef = 0.0;
};

// Message list of one aggregation step over a transformed graph, grouped by
// target in ascending order, self-loop first.
class Propagation {
 public:
  Propagation() = default;
  Propagation(const TransformedGraph& tg, double w0, double wX);

  std::size_t num_nodes() const { return offsets_.size() - 1; }
  std::span<const Message> messages() const { return messages_; }
  std::span<const Message> incoming(NodeId u) const {
    return std::span(messages_).subspan(offsets_[u], offsets_[u + 1] - offsets_[u]);
  }
  std::span<const double> degrees() const { return degrees_; }

 private:
  std::vector<Message> messages_;
  std::vector<std::size_t> offsets_{0};
  std::vector<double> degrees_;
};

// Gated, degree-normalized aggregation. h: N × m, a: 1 × 2m, b: 1 × 1.
ad::Var gated_aggregate(ad::Tape& tape, const Propagation& prop, ad::Var h, ad::Var a, ad::Var b, double tau);

// h + gelu(h·W1 + b1)·W2 + b2.
ad::Var mlp_residual(ad::Tape& tape, ad::Var h, ad::Var w1, ad::Var b1, ad::Var w2, ad::Var b2);

// Value-only aggregation step.
Matrix aggregate_layer(const Propagation& prop, const Matrix& h, const LayerParams& layer, double tau);

// Graph-level inputs that stay fixed across training steps.
struct PreparedGraph {
  Propagation propagation;
  ad::SparseMatrix features;  // N × |X|, per feature_mode
  std::size_t num_graph_nodes = 0;
};

PreparedGraph prepare(const TransformedGraph& tg, const GnnConfig& config);

// Records the full network on `tape` and returns the graph-node logits.
// Parameters are registered as tape parameters in declaration order and
// returned through `param_vars` when non-null. Dropout draws from `rng` in
// training mode only.
ad::Var record_forward(ad::Tape& tape, const PreparedGraph& graph, const ModelParams& params,
                       const GnnConfig& config, bool training, std::mt19937_64* rng,
                       std::vector<ad::Var>* param_vars = nullptr);

// Graph-node logits (|V| × C) in evaluation mode.
Matrix forward(const PreparedGraph& graph, const ModelParams& params, const GnnConfig& config);
Matrix forward(const TransformedGraph& tg, const ModelParams& params, const GnnConfig& config);

struct LossGradient {
  double loss = 0.0;
  ModelParams grad;
};

// Mean cross-entropy over `nodes` and its gradient for every parameter.
LossGradient loss_and_gradient(const PreparedGraph& graph, const ModelParams& params, const GnnConfig& config,
                               std::span<const NodeId> nodes, std::span<const ClassId> targets, bool training,
                               std::mt19937_64* rng);

// Throws ConfigError when params do not match the graph and config.
void check_shapes(const PreparedGraph& graph, const ModelParams& params, const GnnConfig& config);

}  // namespace graphite::gnn
