#include <cmath>

#include <gtest/gtest.h>

#include "sata/cells.hpp"

using namespace sata;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill(Parameter& p, std::initializer_list<double> values) {
  ASSERT_EQ(values.size(), p.size());
  std::size_t k = 0;
  for (double v : values) p.value[k++] = v;
}

CellState state(Tape& t, double h, double c) {
  return CellState{t.constant(Tensor::vector({h})), t.constant(Tensor::vector({c}))};
}

}  // namespace

TEST(Cells, ForgetBiasLandsOnForgetSlicesOnly) {
  Rng rng(1);
  const auto tree = PlainTreeCellParams::make(2, rng, {1.0});
  EXPECT_EQ(tree.b.value, Tensor::vector({0, 0, 1, 1, 1, 1, 0, 0, 0, 0}));
  const auto leaf = LeafLstmParams::make(2, 3, rng, {1.0});
  EXPECT_EQ(leaf.b.value, Tensor::vector({0, 0, 1, 1, 0, 0, 0, 0}));
  EXPECT_EQ(leaf.W.value.shape(), (Shape{8, 5}));
  const auto word = WordTreeCellParams::make(2, 3, rng, {1.0});
  EXPECT_EQ(word.b.value, Tensor::vector({0, 0, 1, 1, 1, 1, 0, 0}));
  EXPECT_EQ(word.W.value.shape(), (Shape{8, 7}));
  EXPECT_FALSE(word.b.decay);
  EXPECT_TRUE(word.W.decay);
}

TEST(Cells, TreeLstmScalarOracle) {
  Rng rng(2);
  auto p = PlainTreeCellParams::make(1, rng);
  // rows: i, f_l, f_r, o, g ; columns: h_l, h_r
  fill(p.W, {0.5, -0.2, 0.1, 0.3, -0.4, 0.6, 0.7, 0.2, 0.9, -0.8});
  fill(p.b, {0.1, 0.2, -0.1, 0.0, 0.05});
  Tape t;
  const double hl = 0.3, cl = -0.5, hr = -0.7, cr = 0.4;
  const CellState s = tree_lstm_step(state(t, hl, cl), state(t, hr, cr), p);
  const double i = sig(0.5 * hl - 0.2 * hr + 0.1), fl = sig(0.1 * hl + 0.3 * hr + 0.2),
               fr = sig(-0.4 * hl + 0.6 * hr - 0.1), o = sig(0.7 * hl + 0.2 * hr), g = std::tanh(0.9 * hl - 0.8 * hr + 0.05);
  const double c = fl * cl + fr * cr + i * g;
  EXPECT_NEAR(s.c.value().item(), c, 1e-15);
  EXPECT_NEAR(s.h.value().item(), o * std::tanh(c), 1e-15);
}

TEST(Cells, TagLeafSplitsCellThenHidden) {
  Rng rng(3);
  auto p = TagTreeCellParams::make(1, rng);
  fill(p.U, {2.0, -0.5});
  fill(p.a, {0.1, 0.3});
  Tape t;
  const double e = 0.4;
  const CellState s = tag_leaf_step(t.constant(Tensor::vector({e})), p);
  EXPECT_NEAR(s.c.value().item(), std::tanh(2.0 * e + 0.1), 1e-15);
  EXPECT_NEAR(s.h.value().item(), std::tanh(-0.5 * e + 0.3), 1e-15);
}

TEST(Cells, TagInternalScalarOracle) {
  Rng rng(4);
  auto p = TagTreeCellParams::make(1, rng);
  // columns: h_l, h_r, e
  fill(p.W, {0.1, 0.2, 0.3, -0.1, 0.4, 0.2, 0.5, -0.3, 0.1, 0.2, 0.2, -0.6, 0.7, 0.1, 0.9});
  fill(p.b, {0.0, 1.0, 1.0, 0.0, -0.2});
  Tape t;
  const double hl = -0.2, cl = 0.6, hr = 0.5, cr = -0.1, e = 0.8;
  const CellState s = tag_internal_step(state(t, hl, cl), state(t, hr, cr), t.constant(Tensor::vector({e})), p);
  const auto row = [&](double a, double b, double c, double bias) { return a * hl + b * hr + c * e + bias; };
  const double i = sig(row(0.1, 0.2, 0.3, 0.0)), fl = sig(row(-0.1, 0.4, 0.2, 1.0)), fr = sig(row(0.5, -0.3, 0.1, 1.0)),
               o = sig(row(0.2, 0.2, -0.6, 0.0)), g = std::tanh(row(0.7, 0.1, 0.9, -0.2));
  const double c = fl * cl + fr * cr + i * g;
  EXPECT_NEAR(s.c.value().item(), c, 1e-15);
  EXPECT_NEAR(s.h.value().item(), o * std::tanh(c), 1e-15);
}

TEST(Cells, LeafLstmScalarOracle) {
  Rng rng(5);
  auto p = LeafLstmParams::make(1, 1, rng);
  // rows: i, f, o, g ; columns: h_prev, x
  fill(p.W, {0.3, 0.6, -0.2, 0.8, 0.5, -0.1, 0.4, 1.1});
  fill(p.b, {0.0, 1.0, 0.2, -0.3});
  Tape t;
  const double h = 0.25, c = -0.4, x = 0.9;
  const CellState s = leaf_lstm_step(state(t, h, c), t.constant(Tensor::vector({x})), p);
  const double i = sig(0.3 * h + 0.6 * x), f = sig(-0.2 * h + 0.8 * x + 1.0), o = sig(0.5 * h - 0.1 * x + 0.2),
               g = std::tanh(0.4 * h + 1.1 * x - 0.3);
  const double c2 = f * c + i * g;
  EXPECT_NEAR(s.c.value().item(), c2, 1e-15);
  EXPECT_NEAR(s.h.value().item(), o * std::tanh(c2), 1e-15);
}

TEST(Cells, WordComposeScalarOracle) {
  Rng rng(6);
  auto p = WordTreeCellParams::make(1, 1, rng);
  fill(p.U, {0.7, -0.4});
  fill(p.a, {0.1});
  // rows: i, f_l, f_r, o ; columns: h_l, h_r, tag
  fill(p.W, {0.2, 0.1, 0.5, -0.3, 0.6, 0.2, 0.4, 0.4, -0.9, 0.1, -0.2, 0.3});
  fill(p.b, {0.0, 0.5, 0.5, -0.1});
  Tape t;
  const double hl = 0.4, cl = 0.2, hr = -0.6, cr = 0.7, tag = -0.5;
  const ComposeResult r =
      sata_compose(state(t, hl, cl), state(t, hr, cr), t.constant(Tensor::vector({tag})), p);
  const auto row = [&](double a, double b, double c, double bias) { return sig(a * hl + b * hr + c * tag + bias); };
  const double g = std::tanh(0.7 * hl - 0.4 * hr + 0.1);
  const double i = row(0.2, 0.1, 0.5, 0.0), fl = row(-0.3, 0.6, 0.2, 0.5), fr = row(0.4, 0.4, -0.9, 0.5),
               o = row(0.1, -0.2, 0.3, -0.1);
  const double c = fl * cl + fr * cr + i * g;
  EXPECT_NEAR(r.candidate.value().item(), g, 1e-15);
  EXPECT_NEAR(r.state.c.value().item(), c, 1e-15);
  EXPECT_NEAR(r.state.h.value().item(), o * std::tanh(c), 1e-15);
}

TEST(Cells, TagReachesGatesButNotCandidate) {
  Rng rng(7);
  auto p = WordTreeCellParams::make(3, 2, rng);
  Tape t;
  const CellState l{t.constant(Tensor::vector({0.1, -0.2, 0.3})), t.constant(Tensor::vector({0.5, 0.0, -0.4}))};
  const CellState r{t.constant(Tensor::vector({-0.3, 0.6, 0.2})), t.constant(Tensor::vector({0.1, 0.2, 0.3}))};
  const ComposeResult a = sata_compose(l, r, t.constant(Tensor::vector({0.5, -1.5})), p);
  const ComposeResult b = sata_compose(l, r, t.constant(Tensor::vector({-2.0, 0.7})), p);
  EXPECT_EQ(a.candidate.value(), b.candidate.value());
  EXPECT_GT(max_abs_diff(a.state.h.value(), b.state.h.value()), 1e-6);
}

TEST(Cells, ShapeErrors) {
  Rng rng(8);
  auto tree = PlainTreeCellParams::make(2, rng);
  auto word = WordTreeCellParams::make(2, 3, rng);
  auto notag = WordTreeCellParams::make(2, 0, rng);
  auto leaf = LeafLstmParams::make(2, 4, rng);
  auto tag = TagTreeCellParams::make(3, rng);
  Tape t;
  const CellState s2 = zero_state(t, 2);
  const CellState s3 = zero_state(t, 3);
  EXPECT_THROW(tree_lstm_step(s2, s3, tree), DimensionError);
  EXPECT_THROW(sata_compose(s2, s2, std::nullopt, word), DimensionError);
  EXPECT_THROW(sata_compose(s2, s2, t.constant(Tensor({3})), notag), DimensionError);
  EXPECT_THROW(sata_compose(s2, s2, t.constant(Tensor({2})), word), DimensionError);
  EXPECT_THROW(leaf_lstm_step(s2, t.constant(Tensor({3})), leaf), DimensionError);
  EXPECT_THROW(tag_leaf_step(t.constant(Tensor({2})), tag), DimensionError);
  EXPECT_THROW(tag_internal_step(s2, s2, t.constant(Tensor({3})), tag), DimensionError);
  EXPECT_NO_THROW(sata_compose(s2, s2, std::nullopt, notag));
}
