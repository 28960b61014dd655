#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace graphite::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t index = 0;
};

// Exact GELU, x·Φ(x), and its derivative Φ(x) + x·φ(x).
double gelu(double x);
double gelu_derivative(double x);

// Reverse-mode differentiation over dense row-major matrices. Operations are
// recorded in execution order; backward() replays them in reverse, so each
// recorded op only needs to know how to push its output gradient to its
// inputs.
class Tape {
 public:
  // Receives the tape and the op's output gradient; accumulates into inputs
  // via Tape::accumulate.
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  Var constant(Matrix value);
  Var parameter(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.index].value; }
  // Gradient of the last backward() root; zero-filled when v was not reached.
  Matrix grad(Var v) const;
  bool needs_grad(Var v) const { return nodes_[v.index].needs_grad; }

  // Records a custom op. `backward` runs only when some input needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  void accumulate(Var v, const Matrix& g);

  Var matmul(Var a, Var b);
  // Constant sparse left operand; x must outlive backward().
  Var sparse_matmul(const SparseMatrix& x, Var w);
  Var add(Var a, Var b);
  // Adds a 1×cols row vector to every row of a.
  Var add_row(Var a, Var row);
  Var gelu(Var a);
  // Elementwise product with a constant matrix (dropout masks).
  Var mul_const(Var a, Matrix c);
  Var top_rows(Var a, std::size_t rows);
  // Σ a ⊙ w as a 1×1 value; reduces non-scalar outputs for gradient checks.
  Var dot_const(Var a, Matrix w);
  // Mean softmax cross-entropy over the selected rows.
  Var cross_entropy(Var logits, std::span<const std::uint32_t> rows, std::span<const std::uint32_t> targets);

  // Runs reverse accumulation from a 1×1 root.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace graphite::ad
