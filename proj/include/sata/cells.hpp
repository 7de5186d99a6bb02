#pragma once

// Recurrence cells. Fused gate matrices stack their blocks in the order the
// gates are listed: (i, f_l, f_r, o, g) for tree cells, (i, f, o, g) for the
// leaf LSTM and (i, f_l, f_r, o) for the gate half of the word-level cell.

#include <cstddef>
#include <optional>
#include <string>

#include "sata/core/error.hpp"
#include "sata/core/init.hpp"
#include "sata/core/ops.hpp"
#include "sata/core/tape.hpp"

namespace sata {

struct CellState {
  Var h;
  Var c;
};

struct CellInit {
  // Initial value of forget-gate biases; 0 leaves every bias at zero.
  double forget_bias = 0.0;
};

namespace detail {

inline Parameter he_weight(std::string name, std::size_t rows, std::size_t cols, Rng& rng) {
  return Parameter(std::move(name), he_init({rows, cols}, cols, rng));
}

inline Parameter bias(std::string name, std::size_t size, double forget_bias = 0.0, std::size_t forget_begin = 0,
                      std::size_t forget_end = 0) {
  Tensor b({size});
  for (std::size_t i = forget_begin; i < forget_end; ++i) b[i] = forget_bias;
  return Parameter(std::move(name), std::move(b), false);
}

inline void require_state(const CellState& s, std::size_t dim, const char* where) {
  if (s.h.size() != dim || s.c.size() != dim) {
    throw DimensionError(std::string(where) + ": expected state of width " + std::to_string(dim) + ", got h" +
                         shape_string(s.h.shape()) + " c" + shape_string(s.c.shape()));
  }
}

inline void require_width(Var v, std::size_t dim, const char* where) {
  if (v.size() != dim || v.value().rank() != 1) {
    throw DimensionError(std::string(where) + ": expected vector of width " + std::to_string(dim) + ", got " +
                         shape_string(v.shape()));
  }
}

// Shared body of the binary tree cells: c = f_l*c_l + f_r*c_r + i*g, h = o*tanh(c).
inline CellState binary_update(Var i, Var fl, Var fr, Var o, Var g, const CellState& left, const CellState& right) {
  Var c = add(add(hadamard(fl, left.c), hadamard(fr, right.c)), hadamard(i, g));
  return CellState{hadamard(o, tanh(c)), c};
}

}  // namespace detail

// Plain binary tree-LSTM.
struct PlainTreeCellParams {
  std::size_t dim = 0;
  Parameter W;  // 5d x 2d
  Parameter b;  // 5d

  static PlainTreeCellParams make(std::size_t d, Rng& rng, const CellInit& init = {}, const std::string& prefix = "tree") {
    return {d, detail::he_weight(prefix + ".W", 5 * d, 2 * d, rng),
            detail::bias(prefix + ".b", 5 * d, init.forget_bias, d, 3 * d)};
  }
};

inline CellState tree_lstm_step(const CellState& left, const CellState& right, PlainTreeCellParams& p) {
  const std::size_t d = p.dim;
  detail::require_state(left, d, "tree_lstm_step");
  detail::require_state(right, d, "tree_lstm_step");
  Tape& t = left.h.tape();
  Var z = add(matmul(t.param(p.W), concat({left.h, right.h})), t.param(p.b));
  return detail::binary_update(sigmoid(slice(z, 0, d)), sigmoid(slice(z, d, 2 * d)), sigmoid(slice(z, 2 * d, 3 * d)),
                               sigmoid(slice(z, 3 * d, 4 * d)), tanh(slice(z, 4 * d, 5 * d)), left, right);
}

// Tag-level tree-LSTM over tag embeddings of width d_T.
struct TagTreeCellParams {
  std::size_t dim = 0;
  Parameter U;  // 2d_T x d_T (leaves)
  Parameter a;  // 2d_T
  Parameter W;  // 5d_T x 3d_T (internal nodes)
  Parameter b;  // 5d_T

  static TagTreeCellParams make(std::size_t d, Rng& rng, const CellInit& init = {}, const std::string& prefix = "tag_cell") {
    return {d, detail::he_weight(prefix + ".U_T", 2 * d, d, rng), detail::bias(prefix + ".a_T", 2 * d),
            detail::he_weight(prefix + ".W_T", 5 * d, 3 * d, rng),
            detail::bias(prefix + ".b_T", 5 * d, init.forget_bias, d, 3 * d)};
  }
};

// [c; h] = tanh(U e + a).
inline CellState tag_leaf_step(Var e, TagTreeCellParams& p) {
  const std::size_t d = p.dim;
  detail::require_width(e, d, "tag_leaf_step");
  Tape& t = e.tape();
  Var y = tanh(add(matmul(t.param(p.U), e), t.param(p.a)));
  return CellState{slice(y, d, 2 * d), slice(y, 0, d)};
}

// Gates from W [h_l; h_r; e] + b.
inline CellState tag_internal_step(const CellState& left, const CellState& right, Var e, TagTreeCellParams& p) {
  const std::size_t d = p.dim;
  detail::require_state(left, d, "tag_internal_step");
  detail::require_state(right, d, "tag_internal_step");
  detail::require_width(e, d, "tag_internal_step");
  Tape& t = e.tape();
  Var z = add(matmul(t.param(p.W), concat({left.h, right.h, e})), t.param(p.b));
  return detail::binary_update(sigmoid(slice(z, 0, d)), sigmoid(slice(z, d, 2 * d)), sigmoid(slice(z, 2 * d, 3 * d)),
                               sigmoid(slice(z, 3 * d, 4 * d)), tanh(slice(z, 4 * d, 5 * d)), left, right);
}

// Sequential LSTM over word vectors.
struct LeafLstmParams {
  std::size_t hidden = 0;
  std::size_t input = 0;
  Parameter W;  // 4d_h x (d_h + d_w)
  Parameter b;  // 4d_h

  static LeafLstmParams make(std::size_t d_h, std::size_t d_w, Rng& rng, const CellInit& init = {},
                             const std::string& prefix = "leaf_lstm") {
    return {d_h, d_w, detail::he_weight(prefix + ".W_L", 4 * d_h, d_h + d_w, rng),
            detail::bias(prefix + ".b_L", 4 * d_h, init.forget_bias, d_h, 2 * d_h)};
  }
};

inline CellState leaf_lstm_step(const CellState& prev, Var x, LeafLstmParams& p) {
  const std::size_t d = p.hidden;
  detail::require_state(prev, d, "leaf_lstm_step");
  detail::require_width(x, p.input, "leaf_lstm_step");
  Tape& t = x.tape();
  Var z = add(matmul(t.param(p.W), concat({prev.h, x})), t.param(p.b));
  Var i = sigmoid(slice(z, 0, d));
  Var f = sigmoid(slice(z, d, 2 * d));
  Var o = sigmoid(slice(z, 2 * d, 3 * d));
  Var g = tanh(slice(z, 3 * d, 4 * d));
  Var c = add(hadamard(f, prev.c), hadamard(i, g));
  return CellState{hadamard(o, tanh(c)), c};
}

inline CellState zero_state(Tape& t, std::size_t dim) {
  return CellState{t.constant(Tensor({dim})), t.constant(Tensor({dim}))};
}

// Word-level tree cell whose gates (not its candidate) see a tag vector.
struct WordTreeCellParams {
  std::size_t hidden = 0;
  std::size_t tag_width = 0;  // 0 when the cell takes no tag input
  Parameter U;  // d_h x 2d_h
  Parameter a;  // d_h
  Parameter W;  // 4d_h x (2d_h + d_T)
  Parameter b;  // 4d_h

  static WordTreeCellParams make(std::size_t d_h, std::size_t d_t, Rng& rng, const CellInit& init = {},
                                 const std::string& prefix = "word_cell") {
    return {d_h, d_t, detail::he_weight(prefix + ".U_w", d_h, 2 * d_h, rng), detail::bias(prefix + ".a_w", d_h),
            detail::he_weight(prefix + ".W_w", 4 * d_h, 2 * d_h + d_t, rng),
            detail::bias(prefix + ".b_w", 4 * d_h, init.forget_bias, d_h, 3 * d_h)};
  }
};

struct ComposeResult {
  CellState state;
  Var candidate;  // g = tanh(U [h_l; h_r] + a)
};

// g = tanh(U [h_l; h_r] + a); (i, f_l, f_r, o) = sigmoid(W [h_l; h_r; tag] + b).
// tag must be given iff the cell was built with a tag width.
inline ComposeResult sata_compose(const CellState& left, const CellState& right, std::optional<Var> tag,
                                  WordTreeCellParams& p) {
  const std::size_t d = p.hidden;
  detail::require_state(left, d, "sata_compose");
  detail::require_state(right, d, "sata_compose");
  if (tag.has_value() != (p.tag_width > 0)) {
    throw DimensionError("sata_compose: tag input " + std::string(tag ? "given to" : "missing for") +
                         " a cell with tag width " + std::to_string(p.tag_width));
  }
  Tape& t = left.h.tape();
  Var children = concat({left.h, right.h});
  Var g = tanh(add(matmul(t.param(p.U), children), t.param(p.a)));
  Var gate_input = children;
  if (tag) {
    detail::require_width(*tag, p.tag_width, "sata_compose");
    gate_input = concat({left.h, right.h, *tag});
  }
  Var z = add(matmul(t.param(p.W), gate_input), t.param(p.b));
  CellState s = detail::binary_update(sigmoid(slice(z, 0, d)), sigmoid(slice(z, d, 2 * d)),
                                      sigmoid(slice(z, 2 * d, 3 * d)), sigmoid(slice(z, 3 * d, 4 * d)), g, left, right);
  return ComposeResult{s, g};
}

}  // namespace sata
