#include "graphite/gnn.hpp"

#include <cmath>
#include <sstream>

#include "graphite/errors.hpp"

namespace graphite::gnn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != value.size()) throw ConfigError("config key '" + key + "': not a number: " + value);
  return x;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("config key '" + key + "': not a non-negative integer: " + value);
  }
  return std::stoull(value);
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = (2.0 * uniform01(rng) - 1.0) * bound;
  }
  return m;
}

}  // namespace

void GnnConfig::validate(bool allow_zero_feature_weight) const {
  if (hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
  if (!(w0 > 0.0)) throw ConfigError("w0 must be positive");
  if (allow_zero_feature_weight ? !(wX >= 0.0) : !(wX > 0.0)) throw ConfigError("wX must be positive");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::original: return "original";
    case FeatureMode::zeros: return "zeros";
    case FeatureMode::normalized: return "normalized";
  }
  return "original";
}

std::string to_string(Metric metric) { return metric == Metric::roc_auc ? "roc_auc" : "accuracy"; }

std::string GnnConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "num_layers = " << num_layers << '\n'
      << "hidden_dim = " << hidden_dim << '\n'
      << "w0 = " << w0 << '\n'
      << "wX = " << wX << '\n'
      << "tau = " << tau << '\n'
      << "dropout = " << dropout << '\n'
      << "learning_rate = " << learning_rate << '\n'
      << "steps = " << steps << '\n'
      << "seed = " << seed << '\n'
      << "feature_mode = " << gnn::to_string(feature_mode) << '\n'
      << "metric = " << gnn::to_string(metric) << '\n';
  return out.str();
}

GnnConfig GnnConfig::parse(const std::string& text) {
  GnnConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(t.substr(0, eq));
    const auto value = trim(t.substr(eq + 1));
    if (key == "num_layers") {
      c.num_layers = parse_count(key, value);
    } else if (key == "hidden_dim") {
      c.hidden_dim = parse_count(key, value);
    } else if (key == "w0") {
      c.w0 = parse_real(key, value);
    } else if (key == "wX") {
      c.wX = parse_real(key, value);
    } else if (key == "tau") {
      c.tau = parse_real(key, value);
    } else if (key == "dropout") {
      c.dropout = parse_real(key, value);
    } else if (key == "learning_rate") {
      c.learning_rate = parse_real(key, value);
    } else if (key == "steps") {
      c.steps = parse_count(key, value);
    } else if (key == "seed") {
      c.seed = parse_count(key, value);
    } else if (key == "feature_mode") {
      if (value == "original") {
        c.feature_mode = FeatureMode::original;
      } else if (value == "zeros") {
        c.feature_mode = FeatureMode::zeros;
      } else if (value == "normalized") {
        c.feature_mode = FeatureMode::normalized;
      } else {
        throw ConfigError("config key 'feature_mode': unknown mode " + value);
      }
    } else if (key == "metric") {
      if (value == "accuracy") {
        c.metric = Metric::accuracy;
      } else if (value == "roc_auc") {
        c.metric = Metric::roc_auc;
      } else {
        throw ConfigError("config key 'metric': unknown metric " + value);
      }
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return c;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ModelParams ModelParams::initialize(std::size_t input_dim, std::size_t num_classes, const GnnConfig& config,
                                    std::mt19937_64& rng) {
  const auto in = static_cast<Eigen::Index>(input_dim);
  const auto m = static_cast<Eigen::Index>(config.hidden_dim);
  const auto c = static_cast<Eigen::Index>(num_classes);
  const auto bound = [](Eigen::Index fan_in) { return fan_in > 0 ? 1.0 / std::sqrt(static_cast<double>(fan_in)) : 0.0; };
  ModelParams p;
  p.input_w = uniform_matrix(in, m, bound(in), rng);
  p.input_b = Matrix::Zero(1, m);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    LayerParams layer;
    layer.gate_a = Matrix::Zero(1, 2 * m);
    layer.gate_b = Matrix::Constant(1, 1, kGateBiasInit);
    layer.mlp_w1 = uniform_matrix(m, m, bound(m), rng);
    layer.mlp_b1 = Matrix::Zero(1, m);
    layer.mlp_w2 = uniform_matrix(m, m, bound(m), rng);
    layer.mlp_b2 = Matrix::Zero(1, m);
    p.layers.push_back(std::move(layer));
  }
  p.head_w = uniform_matrix(m, c, bound(m), rng);
  p.head_b = Matrix::Zero(1, c);
  return p;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (auto* t : z.tensors()) t->setZero();
  return z;
}

std::vector<Matrix*> ModelParams::tensors() {
  std::vector<Matrix*> out{&input_w, &input_b};
  for (auto& l : layers) {
    for (auto* t : {&l.gate_a, &l.gate_b, &l.mlp_w1, &l.mlp_b1, &l.mlp_w2, &l.mlp_b2}) out.push_back(t);
  }
  out.push_back(&head_w);
  out.push_back(&head_b);
  return out;
}

std::vector<const Matrix*> ModelParams::tensors() const {
  auto mutable_view = const_cast<ModelParams*>(this)->tensors();
  return {mutable_view.begin(), mutable_view.end()};
}

std::size_t ModelParams::num_scalars() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

std::vector<double> weighted_degrees(const TransformedGraph& tg, double w0, double wX) {
  const auto& g = tg.base();
  std::vector<double> d(g.num_nodes(), w0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    std::size_t graph_nbrs = 0;
    std::size_t feature_nbrs = 0;
    for (const NodeId v : g.neighbors(u)) {
      if (tg.is_feature_node(v)) {
        ++feature_nbrs;
      } else {
        ++graph_nbrs;
      }
    }
    if (tg.is_feature_node(u)) {
      d[u] += wX * static_cast<double>(graph_nbrs);
    } else {
      d[u] += static_cast<double>(graph_nbrs) + wX * static_cast<double>(feature_nbrs);
    }
  }
  return d;
}

double gate(std::span<const double> h_u, std::span<const double> h_v, std::span<const double> a, double b,
            double tau) {
  const auto m = h_u.size();
  double score = b;
  for (std::size_t i = 0; i < m; ++i) score += a[i] * h_u[i] + a[m + i] * h_v[i];
  return std::tanh(score / tau);
}

Propagation::Propagation(const TransformedGraph& tg, double w0, double wX) {
  const auto& g = tg.base();
  degrees_ = weighted_degrees(tg, w0, wX);
  offsets_.reserve(g.num_nodes() + 1);
  messages_.reserve(g.num_nodes() + 2 * g.num_edges());
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    messages_.push_back({u, u, u, u, w0 / degrees_[u]});
    const bool u_feature = tg.is_feature_node(u);
    for (const NodeId s : g.neighbors(u)) {
      const bool s_feature = tg.is_feature_node(s);
      const double norm = std::sqrt(degrees_[u]) * std::sqrt(degrees_[s]);
      if (!u_feature && !s_feature) {
        messages_.push_back({u, s, u, s, 1.0 / norm});
      } else if (!u_feature) {
        messages_.push_back({u, s, u, s, wX / norm});
      } else {
        messages_.push_back({u, s, s, u, wX / norm});
      }
    }
    offsets_.push_back(messages_.size());
  }
}

ad::Var gated_aggregate(ad::Tape& tape, const Propagation& prop, ad::Var h, ad::Var a, ad::Var b, double tau) {
  const Matrix& H = tape.value(h);
  const auto m = H.cols();
  const Matrix& A = tape.value(a);
  const double bias = tape.value(b)(0, 0);
  const Eigen::VectorXd a_first = A.row(0).head(m).transpose();
  const Eigen::VectorXd a_second = A.row(0).tail(m).transpose();
  const Eigen::VectorXd s_first = H * a_first;
  const Eigen::VectorXd s_second = H * a_second;

  const auto messages = prop.messages();
  std::vector<double> alpha(messages.size());
  Matrix out = Matrix::Zero(H.rows(), m);
  for (std::size_t i = 0; i < messages.size(); ++i) {
    const auto& msg = messages[i];
    alpha[i] = std::tanh((s_first(msg.gate_first) + s_second(msg.gate_second) + bias) / tau);
    out.row(msg.target) += (msg.coef * alpha[i]) * H.row(msg.source);
  }

  return tape.record(std::move(out), {h, a, b},
                     [&prop, h, a, b, tau, alpha = std::move(alpha)](ad::Tape& t, const Matrix& g) {
                       const Matrix& H = t.value(h);
                       const auto m = H.cols();
                       const Matrix& A = t.value(a);
                       Matrix dH = Matrix::Zero(H.rows(), m);
                       Eigen::VectorXd ds_first = Eigen::VectorXd::Zero(H.rows());
                       Eigen::VectorXd ds_second = Eigen::VectorXd::Zero(H.rows());
                       double db = 0.0;
                       const auto messages = prop.messages();
                       for (std::size_t i = 0; i < messages.size(); ++i) {
                         const auto& msg = messages[i];
                         const auto g_row = g.row(msg.target);
                         dH.row(msg.source) += (msg.coef * alpha[i]) * g_row;
                         const double d_alpha = msg.coef * g_row.dot(H.row(msg.source));
                         const double dz = d_alpha * (1.0 - alpha[i] * alpha[i]) / tau;
                         ds_first(msg.gate_first) += dz;
                         ds_second(msg.gate_second) += dz;
                         db += dz;
                       }
                       if (t.needs_grad(h)) {
                         dH += ds_first * A.row(0).head(m);
                         dH += ds_second * A.row(0).tail(m);
                         t.accumulate(h, dH);
                       }
                       if (t.needs_grad(a)) {
                         Matrix da(1, 2 * m);
                         da.row(0).head(m) = ds_first.transpose() * H;
                         da.row(0).tail(m) = ds_second.transpose() * H;
                         t.accumulate(a, da);
                       }
                       if (t.needs_grad(b)) t.accumulate(b, Matrix::Constant(1, 1, db));
                     });
}

ad::Var mlp_residual(ad::Tape& tape, ad::Var h, ad::Var w1, ad::Var b1, ad::Var w2, ad::Var b2) {
  const auto hidden = tape.gelu(tape.add_row(tape.matmul(h, w1), b1));
  return tape.add(h, tape.add_row(tape.matmul(hidden, w2), b2));
}

Matrix aggregate_layer(const Propagation& prop, const Matrix& h, const LayerParams& layer, double tau) {
  ad::Tape tape;
  const auto hv = tape.constant(h);
  const auto av = tape.constant(layer.gate_a);
  const auto bv = tape.constant(layer.gate_b);
  return tape.value(gated_aggregate(tape, prop, hv, av, bv, tau));
}

PreparedGraph prepare(const TransformedGraph& tg, const GnnConfig& config) {
  PreparedGraph pg;
  pg.propagation = Propagation(tg, config.w0, config.wX);
  pg.num_graph_nodes = tg.num_graph_nodes();
  const auto& x = tg.x_star();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(x.nnz());
  for (std::size_t u = 0; u < x.num_rows(); ++u) {
    const auto row = x.row(u);
    const bool graph_node = u < tg.num_graph_nodes();
    if (graph_node && config.feature_mode == FeatureMode::zeros) continue;
    double scale = 1.0;
    if (graph_node && config.feature_mode == FeatureMode::normalized) {
      double l1 = 0.0;
      for (const double v : row.vals) l1 += std::abs(v);
      if (l1 > 0.0) scale = 1.0 / l1;
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      triplets.emplace_back(static_cast<int>(u), static_cast<int>(row.cols[i]), row.vals[i] * scale);
    }
  }
  pg.features.resize(static_cast<Eigen::Index>(x.num_rows()), static_cast<Eigen::Index>(x.width()));
  pg.features.setFromTriplets(triplets.begin(), triplets.end());
  return pg;
}

void check_shapes(const PreparedGraph& graph, const ModelParams& params, const GnnConfig& config) {
  const auto m = static_cast<Eigen::Index>(config.hidden_dim);
  const auto fail = [](const std::string& what) { throw ConfigError("shape mismatch: " + what); };
  if (params.input_w.rows() != graph.features.cols()) fail("input projection does not match feature width");
  if (params.input_w.cols() != m || params.input_b.cols() != m) fail("input projection does not match hidden_dim");
  if (params.layers.size() != config.num_layers) fail("layer count does not match num_layers");
  for (const auto& l : params.layers) {
    if (l.gate_a.rows() != 1 || l.gate_a.cols() != 2 * m || l.gate_b.size() != 1) fail("gate parameters");
    if (l.mlp_w1.rows() != m || l.mlp_w1.cols() != m || l.mlp_w2.rows() != m || l.mlp_w2.cols() != m ||
        l.mlp_b1.cols() != m || l.mlp_b2.cols() != m) {
      fail("MLP parameters");
    }
  }
  if (params.head_w.rows() != m || params.head_b.cols() != params.head_w.cols()) fail("output head");
}

ad::Var record_forward(ad::Tape& tape, const PreparedGraph& graph, const ModelParams& params,
                       const GnnConfig& config, bool training, std::mt19937_64* rng,
                       std::vector<ad::Var>* param_vars) {
  check_shapes(graph, params, config);
  std::vector<ad::Var> vars;
  for (const auto* t : params.tensors()) vars.push_back(tape.parameter(*t));
  std::size_t next = 0;
  const auto take = [&vars, &next] { return vars[next++]; };

  const auto input_w = take();
  const auto input_b = take();
  auto h = tape.add_row(tape.sparse_matmul(graph.features, input_w), input_b);
  const bool use_dropout = training && config.dropout > 0.0;
  const double keep = 1.0 - config.dropout;
  if (use_dropout && rng == nullptr) throw ConfigError("training-mode dropout needs a random generator");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto a = take();
    const auto b = take();
    h = gated_aggregate(tape, graph.propagation, h, a, b, config.tau);
    const auto w1 = take();
    const auto b1 = take();
    const auto w2 = take();
    const auto b2 = take();
    h = mlp_residual(tape, h, w1, b1, w2, b2);
    if (use_dropout) {
      const auto& hv = tape.value(h);
      Matrix mask(hv.rows(), hv.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i) {
        mask.data()[i] = uniform01(*rng) < keep ? 1.0 / keep : 0.0;
      }
      h = tape.mul_const(h, std::move(mask));
    }
  }
  const auto graph_rows = tape.top_rows(h, graph.num_graph_nodes);
  const auto head_w = take();
  const auto head_b = take();
  const auto logits = tape.add_row(tape.matmul(graph_rows, head_w), head_b);
  if (param_vars) *param_vars = std::move(vars);
  return logits;
}

Matrix forward(const PreparedGraph& graph, const ModelParams& params, const GnnConfig& config) {
  ad::Tape tape;
  return tape.value(record_forward(tape, graph, params, config, false, nullptr));
}

Matrix forward(const TransformedGraph& tg, const ModelParams& params, const GnnConfig& config) {
  return forward(prepare(tg, config), params, config);
}

LossGradient loss_and_gradient(const PreparedGraph& graph, const ModelParams& params, const GnnConfig& config,
                               std::span<const NodeId> nodes, std::span<const ClassId> targets, bool training,
                               std::mt19937_64* rng) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  const auto logits = record_forward(tape, graph, params, config, training, rng, &vars);
  const auto loss = tape.cross_entropy(logits, nodes, targets);
  tape.backward(loss);
  LossGradient out{tape.value(loss)(0, 0), params.zeros_like()};
  auto grads = out.grad.tensors();
  for (std::size_t i = 0; i < vars.size(); ++i) *grads[i] = tape.grad(vars[i]);
  return out;
}

}  // namespace graphite::gnn
