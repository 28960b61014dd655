#include "graphite/autodiff.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace graphite::ad {

double gelu(double x) { return 0.5 * x * std::erfc(-x / std::numbers::sqrt2); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Var Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), {}, false, {}});
  return {nodes_.size() - 1};
}

Var Tape::parameter(Matrix value) {
  nodes_.push_back({std::move(value), {}, true, {}});
  return {nodes_.size() - 1};
}

Matrix Tape::grad(Var v) const {
  const auto& n = nodes_[v.index];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const auto in : inputs) needs = needs || nodes_[in.index].needs_grad;
  nodes_.push_back({std::move(value), {}, needs, needs ? std::move(backward) : Backward{}});
  return {nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
  auto& n = nodes_[v.index];
  if (!n.needs_grad) return;
  assert(g.rows() == n.value.rows() && g.cols() == n.value.cols());
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Var Tape::matmul(Var a, Var b) {
  Matrix out = value(a) * value(b);
  return record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.needs_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var Tape::sparse_matmul(const SparseMatrix& x, Var w) {
  Matrix out = x * value(w);
  return record(std::move(out), {w}, [&x, w](Tape& t, const Matrix& g) {
    t.accumulate(w, Matrix(x.transpose() * g));
  });
}

Var Tape::add(Var a, Var b) {
  Matrix out = value(a) + value(b);
  return record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::add_row(Var a, Var row) {
  assert(value(row).rows() == 1 && value(row).cols() == value(a).cols());
  Matrix out = value(a).rowwise() + value(row).row(0);
  return record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var Tape::gelu(Var a) {
  Matrix out = value(a).unaryExpr([](double x) { return ad::gelu(x); });
  return record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix d = t.value(a).unaryExpr([](double x) { return gelu_derivative(x); });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Var Tape::mul_const(Var a, Matrix c) {
  Matrix out = value(a).cwiseProduct(c);
  return record(std::move(out), {a}, [a, c = std::move(c)](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(c));
  });
}

Var Tape::top_rows(Var a, std::size_t rows) {
  const auto r = static_cast<Eigen::Index>(rows);
  Matrix out = value(a).topRows(r);
  return record(std::move(out), {a}, [a, r](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(t.value(a).rows(), t.value(a).cols());
    full.topRows(r) = g;
    t.accumulate(a, full);
  });
}

Var Tape::dot_const(Var a, Matrix w) {
  Matrix out(1, 1);
  out(0, 0) = value(a).cwiseProduct(w).sum();
  return record(std::move(out), {a}, [a, w = std::move(w)](Tape& t, const Matrix& g) {
    t.accumulate(a, g(0, 0) * w);
  });
}

Var Tape::cross_entropy(Var logits, std::span<const std::uint32_t> rows, std::span<const std::uint32_t> targets) {
  if (rows.empty() || rows.size() != targets.size()) {
    throw std::invalid_argument("cross_entropy needs matching, non-empty row and target lists");
  }
  const auto& z = value(logits);
  Matrix probs(static_cast<Eigen::Index>(rows.size()), z.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto zr = z.row(rows[i]);
    const double m = zr.maxCoeff();
    const auto shifted = (zr.array() - m).matrix();
    const double log_norm = std::log(shifted.array().exp().sum());
    probs.row(static_cast<Eigen::Index>(i)) = (shifted.array() - log_norm).exp().matrix();
    total += log_norm - shifted(targets[i]);
  }
  const double count = static_cast<double>(rows.size());
  Matrix out(1, 1);
  out(0, 0) = total / count;
  std::vector<std::uint32_t> row_copy(rows.begin(), rows.end());
  std::vector<std::uint32_t> target_copy(targets.begin(), targets.end());
  return record(std::move(out), {logits},
                [logits, probs = std::move(probs), row_copy = std::move(row_copy),
                 target_copy = std::move(target_copy), count](Tape& t, const Matrix& g) {
                  Matrix d = Matrix::Zero(t.value(logits).rows(), t.value(logits).cols());
                  for (std::size_t i = 0; i < row_copy.size(); ++i) {
                    auto dr = d.row(row_copy[i]);
                    dr += probs.row(static_cast<Eigen::Index>(i));
                    dr(target_copy[i]) -= 1.0;
                  }
                  t.accumulate(logits, (g(0, 0) / count) * d);
                });
}

void Tape::backward(Var root) {
  if (value(root).rows() != 1 || value(root).cols() != 1) {
    throw std::invalid_argument("backward root must be a scalar");
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[root.index].needs_grad) return;
  nodes_[root.index].grad = Matrix::Ones(1, 1);
  for (std::size_t i = root.index + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

}  // namespace graphite::ad
