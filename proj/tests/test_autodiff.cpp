#include <gtest/gtest.h>

#include <functional>

#include "graphite/autodiff.hpp"
#include "oracles.hpp"

namespace graphite::ad {
namespace {

constexpr double kStep = 1e-4;
constexpr double kMaxRelError = 1e-4;

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * oracle::uniform(rng) - 1.0;
  return m;
}

double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

// Builds a scalar from `inputs` via `f` (reduced by a fixed random weighting)
// and compares the tape gradient of every input entry to central differences.
void check_gradients(std::vector<Matrix> inputs, const std::function<Var(Tape&, const std::vector<Var>&)>& f,
                     std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  Matrix weights;
  const auto evaluate = [&](const std::vector<Matrix>& values, std::vector<Matrix>* grads) {
    Tape tape;
    std::vector<Var> vars;
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
  evaluate(inputs, &grads);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (Eigen::Index j = 0; j < inputs[i].size(); ++j) {
      auto plus = inputs;
      auto minus = inputs;
      plus[i].data()[j] += kStep;
      minus[i].data()[j] -= kStep;
      const double fd = (evaluate(plus, nullptr) - evaluate(minus, nullptr)) / (2.0 * kStep);
      worst = std::max(worst, relative_error(grads[i].data()[j], fd));
    }
  }
  EXPECT_LT(worst, kMaxRelError);
}

TEST(Gelu, MatchesSeriesNormalCdf) {
  EXPECT_EQ(gelu(0.0), 0.0);
  for (const double x : {-2.0, -1.0, 0.0, 1.0, 2.0, -0.3, 2.7}) {
    const auto phi = oracle::normal_cdf_series(x);
    EXPECT_NEAR(gelu(x), static_cast<double>(x * phi), 1e-15) << x;
    const long double density = std::exp(-0.5L * x * x) / std::sqrt(2.0L * 3.141592653589793238462643383279502884L);
    EXPECT_NEAR(gelu_derivative(x), static_cast<double>(phi + x * density), 1e-15) << x;
  }
}

TEST(TapeGradients, Matmul) {
  std::mt19937_64 rng(1);
  check_gradients({random_matrix(rng, 3, 4), random_matrix(rng, 4, 2)},
                  [](Tape& t, const std::vector<Var>& v) { return t.matmul(v[0], v[1]); });
}

TEST(TapeGradients, AddAndAddRow) {
  std::mt19937_64 rng(2);
  check_gradients({random_matrix(rng, 3, 4), random_matrix(rng, 3, 4), random_matrix(rng, 1, 4)},
                  [](Tape& t, const std::vector<Var>& v) { return t.add_row(t.add(v[0], v[1]), v[2]); });
}

TEST(TapeGradients, Gelu) {
  std::mt19937_64 rng(3);
  check_gradients({random_matrix(rng, 4, 5) * 3.0}, [](Tape& t, const std::vector<Var>& v) { return t.gelu(v[0]); });
}

TEST(TapeGradients, SparseMatmulMaskAndTopRows) {
  std::mt19937_64 rng(4);
  SparseMatrix x(4, 3);
  x.insert(0, 1) = 1.0;
  x.insert(2, 0) = 0.5;
  x.insert(3, 2) = 2.0;
  x.makeCompressed();
  Matrix mask = random_matrix(rng, 4, 2);
  check_gradients({random_matrix(rng, 3, 2)}, [&](Tape& t, const std::vector<Var>& v) {
    return t.top_rows(t.mul_const(t.sparse_matmul(x, v[0]), mask), 3);
  });
}

TEST(TapeGradients, CrossEntropy) {
  std::mt19937_64 rng(5);
  const std::vector<std::uint32_t> rows{0, 2, 3};
  const std::vector<std::uint32_t> targets{1, 0, 2};
  check_gradients({random_matrix(rng, 5, 3) * 4.0},
                  [&](Tape& t, const std::vector<Var>& v) { return t.cross_entropy(v[0], rows, targets); });
}

TEST(CrossEntropy, ValueAndStability) {
  Tape tape;
  Matrix logits(2, 2);
  logits << 0.0, 0.0, 1000.0, -1000.0;
  const auto l = tape.constant(logits);
  const std::vector<std::uint32_t> rows{0, 1};
  const std::vector<std::uint32_t> targets{0, 0};
  const auto loss = tape.cross_entropy(l, rows, targets);
  EXPECT_NEAR(tape.value(loss)(0, 0), std::log(2.0) / 2.0, 1e-15);
}

TEST(Tape, UnreachedGradientIsZero) {
  Tape tape;
  const auto a = tape.parameter(Matrix::Ones(2, 2));
  const auto b = tape.parameter(Matrix::Ones(2, 2));
  const auto loss = tape.dot_const(a, Matrix::Ones(2, 2));
  tape.backward(loss);
  EXPECT_EQ(tape.grad(a), Matrix::Ones(2, 2));
  EXPECT_EQ(tape.grad(b), Matrix::Zero(2, 2));
}

}  // namespace
}  // namespace graphite::ad
