#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "sata/core/dropout.hpp"
#include "sata/core/gradcheck.hpp"
#include "sata/core/init.hpp"
#include "sata/core/ops.hpp"
#include "sata/core/pca.hpp"
#include "sata/core/tape.hpp"
#include "sata/core/tensor.hpp"

using namespace sata;

namespace {

Parameter random_param(const char* name, Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor t(shape);
  for (double& v : t.data()) v = g(rng);
  return Parameter(name, t);
}

Var dot_with(Var x, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor r(x.shape());
  for (double& v : r.data()) v = g(rng);
  return sum(mask(x, r));
}

}  // namespace

TEST(Tensor, RejectsZeroExtentsAndEmptyShape) {
  EXPECT_THROW(Tensor({0}), DimensionError);
  EXPECT_THROW(Tensor({3, 0}), DimensionError);
  EXPECT_THROW(Tensor(Shape{}), DimensionError);
  EXPECT_THROW(Tensor({2}, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(Tensor, MatrixFactoryIsRowMajor) {
  Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m.at(1, 0), 4.0);
  EXPECT_EQ(m[2], 3.0);
}

TEST(Ops, MatmulMatrixVector) {
  Tape t;
  Var w = t.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  Var x = t.constant(Tensor::vector({5, 6}));
  EXPECT_EQ(matmul(w, x).value(), Tensor::vector({17, 39}));
}

TEST(Ops, MatmulShapeMismatchNamesBothShapes) {
  Tape t;
  Var w = t.constant(Tensor({2, 3}));
  Var x = t.constant(Tensor({2}));
  try {
    matmul(w, x);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2]"), std::string::npos) << msg;
  }
}

TEST(Ops, SigmoidIsStableForLargeInputs) {
  Tape t;
  Var s = sigmoid(t.constant(Tensor::vector({-800.0, 0.0, 800.0})));
  EXPECT_EQ(s.value()[0], 0.0);
  EXPECT_EQ(s.value()[1], 0.5);
  EXPECT_EQ(s.value()[2], 1.0);
}

TEST(Ops, SoftmaxSumsToOneAndIsShiftInvariant) {
  Tape t;
  Var a = softmax(t.constant(Tensor::vector({1.0, 2.0, 3.0})));
  Var b = softmax(t.constant(Tensor::vector({1001.0, 1002.0, 1003.0})));
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_LT(max_abs_diff(a.value(), b.value()), 1e-15);
}

TEST(Ops, CrossEntropyMatchesLogSumExpOracle) {
  Tape t;
  const std::vector<double> z = {0.3, -1.2, 2.5};
  Var ce = cross_entropy(t.constant(Tensor::vector(z)), 1);
  const double lse = std::log(std::exp(0.3) + std::exp(-1.2) + std::exp(2.5));
  EXPECT_NEAR(ce.value().item(), lse - (-1.2), 1e-14);
  EXPECT_THROW(cross_entropy(t.constant(Tensor::vector(z)), 3), std::out_of_range);
}

TEST(Ops, CrossEntropyOfHugeLogitsIsFinite) {
  Tape t;
  Var ce = cross_entropy(t.constant(Tensor::vector({1000.0, -1000.0})), 1);
  EXPECT_NEAR(ce.value().item(), 2000.0, 1e-9);
}

TEST(Ops, NonFiniteValuesAreErrors) {
  Tape t;
  Var x = t.constant(Tensor::vector({0.0, 1.0}));
  EXPECT_THROW(pow(x, -1.0), NumericError);
  EXPECT_THROW(t.constant(Tensor::vector({std::numeric_limits<double>::quiet_NaN()})), NumericError);
}

TEST(Ops, ConcatAndSliceRoundTrip) {
  Tape t;
  Var a = t.constant(Tensor::vector({1, 2}));
  Var b = t.constant(Tensor::vector({3}));
  Var c = concat({a, b});
  EXPECT_EQ(c.value(), Tensor::vector({1, 2, 3}));
  EXPECT_EQ(slice(c, 1, 3).value(), Tensor::vector({2, 3}));
  EXPECT_THROW(slice(c, 2, 4), DimensionError);
}

TEST(Tape, BackwardRequiresScalarLoss) {
  Tape t;
  Var x = t.constant(Tensor::vector({1, 2}));
  EXPECT_THROW(t.backward(x), DimensionError);
}

TEST(Tape, ParameterSharedTwiceAccumulates) {
  // d/dw (w*w) summed = 2w per element.
  Parameter w("w", Tensor::vector({1.5, -2.0}));
  Tape t;
  Var v = t.param(w);
  t.backward(sum(hadamard(v, v)));
  EXPECT_EQ(w.grad, Tensor::vector({3.0, -4.0}));
}

TEST(Tape, RowGatherSendsGradientToThatRowOnly) {
  Parameter e("emb", Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}));
  Tape t;
  t.backward(sum(t.row(e, 1)));
  EXPECT_EQ(e.grad, Tensor::matrix({{0, 0}, {1, 1}, {0, 0}}));
}

TEST(Tape, FrozenParameterGetsNoGradient) {
  Parameter e("emb", Tensor::matrix({{1, 2}}));
  e.trainable = false;
  Tape t;
  EXPECT_TRUE(t.gradients(sum(t.row(e, 0))).empty());
}

// Finite-difference check of each differentiable op through a random
// projection.
TEST(GradCheck, ElementwiseAndReductionOps) {
  Parameter x = random_param("x", {4}, 1);
  Parameter y = random_param("y", {4}, 2);
  Parameter w = random_param("w", {3, 4}, 3);
  const std::vector<std::pair<const char*, LossFn>> cases = {
      {"add", [&](Tape& t) { return dot_with(add(t.param(x), t.param(y)), 9); }},
      {"sub", [&](Tape& t) { return dot_with(sub(t.param(x), t.param(y)), 9); }},
      {"hadamard", [&](Tape& t) { return dot_with(hadamard(t.param(x), t.param(y)), 9); }},
      {"matmul", [&](Tape& t) { return dot_with(matmul(t.param(w), t.param(x)), 9); }},
      {"sigmoid", [&](Tape& t) { return dot_with(sigmoid(t.param(x)), 9); }},
      {"tanh", [&](Tape& t) { return dot_with(tanh(t.param(x)), 9); }},
      {"relu", [&](Tape& t) { return dot_with(relu(t.param(x)), 9); }},
      {"abs", [&](Tape& t) { return dot_with(abs(t.param(x)), 9); }},
      {"softmax", [&](Tape& t) { return dot_with(softmax(t.param(x)), 9); }},
      {"concat_slice", [&](Tape& t) { return dot_with(slice(concat({t.param(x), t.param(y)}), 2, 7), 9); }},
      {"pow", [&](Tape& t) { return dot_with(pow(add_scalar(hadamard(t.param(x), t.param(x)), 0.5), -0.5), 9); }},
      {"mean", [&](Tape& t) {
         std::vector<Var> xs = {t.param(x), t.param(y)};
         return dot_with(mean(xs), 9);
       }},
      {"cross_entropy", [&](Tape& t) { return cross_entropy(t.param(x), 2); }},
  };
  for (const auto& [name, f] : cases) {
    const GradCheckResult r = grad_check(f, {&x, &y, &w});
    EXPECT_LE(r.max_rel_err, 1e-7) << name << " worst at " << r.param << "[" << r.index << "]";
  }
}

TEST(GradCheck, DetectsAWrongGradient) {
  Parameter x = random_param("x", {3}, 4);
  LossFn f = [&](Tape& t) {
    Var v = t.param(x);
    // Forward is 2*sum(x) but the backward claims sum(x).
    Tensor doubled = v.value();
    for (double& d : doubled.data()) d *= 2.0;
    Var wrong = t.push(doubled, [id = v.id()](Tape& tape, std::size_t self) {
      tape.accumulator(id) += tape.upstream(self);
    });
    return sum(wrong);
  };
  EXPECT_GT(grad_check(f, {&x}).max_rel_err, 0.1);
}

TEST(Init, HeInitHasExpectedSpread) {
  Rng rng(5);
  Tensor w = he_init({200, 50}, 50, rng);
  double ss = 0.0;
  for (double v : w.data()) ss += v * v;
  EXPECT_NEAR(std::sqrt(ss / w.size()), std::sqrt(2.0 / 50.0), 0.01);
  EXPECT_THROW(he_init({2, 2}, 0, rng), std::invalid_argument);
}

TEST(Dropout, EvalModeIsIdentityAndTrainModeKeepsExpectation) {
  Tape t;
  Var x = t.constant(Tensor({10000}, 1.0));
  EXPECT_EQ(dropout(x, 0.5, ForwardMode::eval()).value(), x.value());
  Rng rng(3);
  Var y = dropout(x, 0.5, ForwardMode::training(rng));
  double s = 0.0;
  for (double v : y.value().data()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    s += v;
  }
  EXPECT_NEAR(s / 10000.0, 1.0, 0.05);
  EXPECT_THROW(dropout(x, 0.5, ForwardMode{true, nullptr}), std::logic_error);
}

TEST(Pca, CollinearPointsProjectOntoOneAxis) {
  // Points on the line y = 2x: first component is (1, 2)/sqrt(5), second has
  // zero variance.
  Tensor pts = Tensor::matrix({{0, 0}, {1, 2}, {2, 4}, {3, 6}});
  const PcaResult r = pca(pts, 2);
  EXPECT_NEAR(r.components.at(0, 0), 1.0 / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(r.components.at(0, 1), 2.0 / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(r.eigenvalues[1], 0.0, 1e-12);
  // Population variance of the projections along the line: 5 * var(x) = 6.25.
  EXPECT_NEAR(r.eigenvalues[0], 6.25, 1e-12);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.projection.at(i, 1), 0.0, 1e-12);
  EXPECT_NEAR(r.projection.at(3, 0) - r.projection.at(0, 0), 3.0 * std::sqrt(5.0), 1e-12);
}

TEST(Pca, RejectsTooFewPointsOrBadK) {
  EXPECT_THROW(pca(Tensor::matrix({{1, 2}}), 1), std::invalid_argument);
  EXPECT_THROW(pca(Tensor::matrix({{1, 2}, {3, 4}}), 3), std::invalid_argument);
}
