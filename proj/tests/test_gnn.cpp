#include <gtest/gtest.h>

#include <functional>
#include <numeric>

#include "graphite/errors.hpp"
#include "graphite/gnn.hpp"
#include "graphite/trainer.hpp"
#include "graphite/transform.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace graphite::gnn {
namespace {

using ad::Matrix;

GnnConfig small_config() {
  GnnConfig c;
  c.num_layers = 2;
  c.hidden_dim = 4;
  c.dropout = 0.0;
  c.w0 = 0.7;
  c.wX = 0.6;
  c.tau = 0.8;
  return c;
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * oracle::uniform(rng) - 1.0;
  return m;
}

oracle::DenseMatrix to_dense(const Matrix& m) {
  oracle::DenseMatrix out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

TEST(WeightedDegrees, Examples) {
  const auto tg = graphite_transform(oracle::g_fig());
  EXPECT_DOUBLE_EQ(weighted_degrees(tg, 1.0, 0.5)[1], 4.0);
  EXPECT_NEAR(weighted_degrees(tg, 0.2, 0.1)[6], 0.5, 1e-15);
  GraphInput in;
  in.num_nodes = 2;
  const auto iso = TransformedGraph::identity(Graph::build(in));
  EXPECT_EQ(weighted_degrees(iso, 0.3, 0.1)[0], 0.3);
}

TEST(Gate, Examples) {
  const std::vector<double> h{0.3, -1.2};
  const std::vector<double> zero(4, 0.0);
  EXPECT_EQ(gate(h, h, zero, 0.0, 0.5), 0.0);
  EXPECT_NEAR(gate(h, h, zero, 0.5, 0.5), 0.7615941559557649, 1e-15);

  std::mt19937_64 rng(17);
  std::vector<double> hu(3), hv(3), a(6);
  for (auto* v : {&hu, &hv, &a}) {
    for (auto& x : *v) x = 2.0 * oracle::uniform(rng) - 1.0;
  }
  EXPECT_NE(gate(hu, hv, a, 0.1, 1.0), gate(hv, hu, a, 0.1, 1.0));
}

TEST(Gate, TemperatureBound) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> hu(4), hv(4), a(8);
    for (auto* v : {&hu, &hv, &a}) {
      for (auto& x : *v) x = 4.0 * oracle::uniform(rng) - 2.0;
    }
    const double b = oracle::uniform(rng) - 0.5;
    double score = 0.0;
    for (int i = 0; i < 4; ++i) score += a[i] * hu[i] + a[4 + i] * hv[i];
    for (const double tau : {1.0, 10.0, 1e3, 1e6}) {
      EXPECT_LE(std::abs(gate(hu, hv, a, b, tau)), (std::abs(score) + std::abs(b)) / tau + 1e-15);
    }
  }
}

TEST(Aggregate, SingleNodeAndTwoNodeCases) {
  GraphInput single;
  single.num_nodes = 1;
  const auto one = TransformedGraph::identity(Graph::build(single));
  LayerParams layer;
  layer.gate_a = Matrix::Zero(1, 4);
  layer.gate_b = Matrix::Constant(1, 1, 0.4);
  Matrix h(1, 2);
  h << 1.5, -2.0;
  const double alpha = std::tanh(0.4 / 0.5);
  const auto out = aggregate_layer(Propagation(one, 0.7, 0.1), h, layer, 0.5);
  EXPECT_NEAR(out(0, 0), alpha * 1.5, 1e-15);
  EXPECT_NEAR(out(0, 1), alpha * -2.0, 1e-15);

  GraphInput pair;
  pair.num_nodes = 2;
  pair.edges = {{0, 1}};
  const auto two = TransformedGraph::identity(Graph::build(pair));
  const auto out2 = aggregate_layer(Propagation(two, 1.0, 0.1), Matrix::Ones(2, 2), layer, 0.5);
  EXPECT_NEAR((out2 - Matrix::Constant(2, 2, alpha)).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Aggregate, MatchesDenseOracleOnFixture) {
  const auto tg = graphite_transform(oracle::g_fig());
  std::mt19937_64 rng(4);
  for (int draw = 0; draw < 20; ++draw) {
    LayerParams layer;
    layer.gate_a = random_matrix(rng, 1, 6);
    layer.gate_b = random_matrix(rng, 1, 1);
    const Matrix h = random_matrix(rng, static_cast<Eigen::Index>(tg.num_nodes()), 3);
    const double w0 = 0.5 + oracle::uniform(rng);
    const double wX = 0.05 + oracle::uniform(rng);
    const double tau = 0.2 + oracle::uniform(rng);
    const auto sparse = aggregate_layer(Propagation(tg, w0, wX), h, layer, tau);
    const std::vector<double> a(layer.gate_a.data(), layer.gate_a.data() + 6);
    const auto dense = oracle::multiply(oracle::dense_propagation(tg, to_dense(h), a, layer.gate_b(0, 0), tau, w0, wX),
                                        to_dense(h));
    for (Eigen::Index i = 0; i < sparse.rows(); ++i) {
      for (Eigen::Index j = 0; j < sparse.cols(); ++j) EXPECT_NEAR(sparse(i, j), dense[i][j], 1e-10);
    }
  }
}

TEST(Aggregate, ZeroFeatureWeightSilencesFeatureNodes) {
  std::mt19937_64 rng(31);
  const auto g = oracle::random_graph(rng, 12, 4, 0.3, 0.4);
  const auto tg = graphite_transform(g);
  const auto plain = TransformedGraph::identity(g);
  LayerParams layer;
  layer.gate_a = random_matrix(rng, 1, 6);
  layer.gate_b = random_matrix(rng, 1, 1);
  const Matrix h = random_matrix(rng, static_cast<Eigen::Index>(tg.num_nodes()), 3);
  const auto with = aggregate_layer(Propagation(tg, 1.0, 0.0), h, layer, 1.0);
  const auto without = aggregate_layer(Propagation(plain, 1.0, 0.0), h.topRows(12), layer, 1.0);
  EXPECT_EQ(Matrix(with.topRows(12)), without);
}

TEST(Mlp, ZeroWeightsPassThrough) {
  ad::Tape tape;
  Matrix h(2, 3);
  h << 1, 2, 3, 4, 5, 6;
  Matrix b2(1, 3);
  b2 << 0.5, -1, 2;
  const auto out = mlp_residual(tape, tape.constant(h), tape.constant(Matrix::Zero(3, 3)),
                                tape.constant(Matrix::Constant(1, 3, 0.7)), tape.constant(Matrix::Zero(3, 3)),
                                tape.constant(b2));
  EXPECT_EQ(tape.value(out), Matrix(h.rowwise() + b2.row(0)));
}

// Finite differences on one module at a time: reduce the module output with a
// fixed weighting and compare against the tape gradient of each input.
double module_gradient_error(const std::function<ad::Var(ad::Tape&, std::vector<ad::Var>&)>& f,
                             std::vector<Matrix> inputs, std::mt19937_64& rng) {
  Matrix weights;
  const auto run = [&](const std::vector<Matrix>& values, std::vector<Matrix>* grads) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& v : values) vars.push_back(tape.parameter(v));
    const auto out = f(tape, vars);
    if (weights.size() == 0) weights = random_matrix(rng, tape.value(out).rows(), tape.value(out).cols());
    const auto loss = tape.dot_const(out, weights);
    if (grads) {
      tape.backward(loss);
      for (const auto& v : vars) grads->push_back(tape.grad(v));
    }
    return tape.value(loss)(0, 0);
  };
  std::vector<Matrix> grads;
  run(inputs, &grads);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (Eigen::Index j = 0; j < inputs[i].size(); ++j) {
      auto plus = inputs;
      auto minus = inputs;
      plus[i].data()[j] += 1e-4;
      minus[i].data()[j] -= 1e-4;
      const double fd = (run(plus, nullptr) - run(minus, nullptr)) / 2e-4;
      const double ad = grads[i].data()[j];
      worst = std::max(worst, std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-8}));
    }
  }
  return worst;
}

TEST(ModuleGradients, GatedAggregate) {
  const auto tg = graphite_transform(oracle::g_fig());
  const Propagation prop(tg, 0.8, 0.4);
  std::mt19937_64 rng(41);
  for (int seed = 0; seed < 3; ++seed) {
    const double err = module_gradient_error(
        [&](ad::Tape& t, std::vector<ad::Var>& v) { return gated_aggregate(t, prop, v[0], v[1], v[2], 0.7); },
        {random_matrix(rng, 8, 3), random_matrix(rng, 1, 6), random_matrix(rng, 1, 1)}, rng);
    EXPECT_LT(err, 1e-4);
  }
}

TEST(ModuleGradients, MlpResidual) {
  std::mt19937_64 rng(42);
  const double err = module_gradient_error(
      [](ad::Tape& t, std::vector<ad::Var>& v) { return mlp_residual(t, v[0], v[1], v[2], v[3], v[4]); },
      {random_matrix(rng, 5, 3), random_matrix(rng, 3, 3), random_matrix(rng, 1, 3), random_matrix(rng, 3, 3),
       random_matrix(rng, 1, 3)},
      rng);
  EXPECT_LT(err, 1e-4);
}

TEST(FullLossGradient, SmallGraph) {
  std::mt19937_64 rng(7);
  const auto g = oracle::random_graph(rng, 20, 5, 0.2, 0.3, 3);
  const auto tg = graphite_transform(g);
  EXPECT_LT(oracle::full_loss_gradient_error(tg, small_config(), 50, 1), 1e-4);
}

TEST(Forward, DeterministicAndDropoutFreeTrainingEqualsEval) {
  std::mt19937_64 rng(9);
  const auto g = oracle::random_graph(rng, 15, 4, 0.3, 0.3, 2);
  const auto tg = graphite_transform(g);
  const auto config = small_config();
  const auto params = oracle::random_params(tg, config, rng);
  EXPECT_EQ(forward(tg, params, config), forward(tg, params, config));

  const auto graph = prepare(tg, config);
  ad::Tape tape;
  std::mt19937_64 dropout_rng(1);
  const auto train_logits = tape.value(record_forward(tape, graph, params, config, true, &dropout_rng));
  EXPECT_EQ(train_logits, forward(graph, params, config));
  EXPECT_EQ(forward(graph, params, config).rows(), 15);
}

TEST(Forward, DropoutChangesTrainingOutputOnly) {
  std::mt19937_64 rng(10);
  const auto tg = graphite_transform(oracle::random_graph(rng, 15, 4, 0.3, 0.3, 2));
  auto config = small_config();
  config.dropout = 0.5;
  const auto params = oracle::random_params(tg, config, rng);
  const auto graph = prepare(tg, config);
  ad::Tape tape;
  std::mt19937_64 dropout_rng(1);
  EXPECT_NE(tape.value(record_forward(tape, graph, params, config, true, &dropout_rng)), forward(graph, params, config));
  ad::Tape no_rng;
  EXPECT_THROW(record_forward(no_rng, graph, params, config, true, nullptr), ConfigError);
}

TEST(Forward, PermutationEquivariance) {
  std::mt19937_64 rng(12);
  const auto g = oracle::random_graph(rng, 14, 4, 0.3, 0.35, 2);
  const auto config = small_config();
  const auto tg = graphite_transform(g);
  const auto params = oracle::random_params(tg, config, rng);
  std::vector<NodeId> perm(g.num_nodes());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto in = g.to_input();
  for (auto& [u, v] : in.edges) {
    u = perm[u];
    v = perm[v];
  }
  for (auto& f : in.features) f.node = perm[f.node];
  std::vector<std::optional<ClassId>> labels(in.labels.size());
  for (NodeId u = 0; u < labels.size(); ++u) labels[perm[u]] = in.labels[u];
  in.labels = labels;
  const auto a = forward(tg, params, config);
  const auto b = forward(graphite_transform(Graph::build(in)), params, config);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) EXPECT_NEAR(a(u, c), b(perm[u], c), 1e-12);
  }
}

TEST(Forward, FeatureModes) {
  const auto tg = graphite_transform(oracle::g_fig());
  auto config = small_config();
  config.feature_mode = FeatureMode::zeros;
  const auto zeros = prepare(tg, config);
  EXPECT_EQ(zeros.features.toDense().topRows(5), Matrix::Zero(5, 3));
  EXPECT_EQ(zeros.features.toDense().row(7), prepare(tg, small_config()).features.toDense().row(7));
  config.feature_mode = FeatureMode::normalized;
  const auto norm = prepare(tg, config);
  EXPECT_NEAR(norm.features.toDense().row(1).sum(), 1.0, 1e-15);
  EXPECT_NEAR(norm.features.toDense()(6, 2), 1.0 / 3.0, 1e-15);
}

TEST(Forward, ShapeMismatchIsAConfigError) {
  const auto tg = graphite_transform(oracle::g_fig());
  auto config = small_config();
  std::mt19937_64 rng(1);
  auto params = ModelParams::initialize(3, 2, config, rng);
  config.hidden_dim = 5;
  EXPECT_THROW(forward(tg, params, config), ConfigError);
  config.hidden_dim = 4;
  params.layers.pop_back();
  EXPECT_THROW(forward(tg, params, config), ConfigError);
}

TEST(Init, Scheme) {
  GnnConfig config;
  config.num_layers = 3;
  config.hidden_dim = 16;
  std::mt19937_64 rng(2);
  const auto p = ModelParams::initialize(9, 4, config, rng);
  EXPECT_LE(p.input_w.cwiseAbs().maxCoeff(), 1.0 / 3.0);
  EXPECT_LE(p.layers[1].mlp_w1.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_EQ(p.input_b, Matrix::Zero(1, 16));
  for (const auto& l : p.layers) {
    EXPECT_EQ(l.gate_a, Matrix::Zero(1, 32));
    EXPECT_EQ(l.gate_b(0, 0), kGateBiasInit);
    EXPECT_EQ(l.mlp_b1, Matrix::Zero(1, 16));
  }
  EXPECT_EQ(p.num_scalars(), 9u * 16 + 16 + 3 * (32 + 1 + 2 * 256 + 2 * 16) + 16 * 4 + 4);
}

TEST(Config, TextRoundTripAndValidation) {
  GnnConfig c;
  c.num_layers = 3;
  c.wX = 0.6;
  c.feature_mode = FeatureMode::normalized;
  c.metric = Metric::roc_auc;
  const auto parsed = GnnConfig::parse(c.to_text());
  EXPECT_EQ(parsed.to_text(), c.to_text());
  EXPECT_THROW(GnnConfig::parse("bogus = 1\n"), ConfigError);
  EXPECT_THROW(GnnConfig::parse("tau = -1\n").validate(), ConfigError);
  EXPECT_THROW(GnnConfig::parse("wX = 0\n").validate(), ConfigError);
  EXPECT_NO_THROW(GnnConfig::parse("wX = 0\n").validate(true));
  EXPECT_THROW(GnnConfig::parse("dropout = 1\n").validate(), ConfigError);
  EXPECT_THROW(GnnConfig::parse("steps = many\n"), ConfigError);
  EXPECT_EQ(GnnConfig::parse("# comment\n\nhidden_dim = 7\n").hidden_dim, 7u);
}

}  // namespace
}  // namespace graphite::gnn
