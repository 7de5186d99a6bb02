#pragma once

// Task heads: s = ReLU(W_s x + b_s), logits = W_c s + b_c, with optional
// batch normalisation of x. x is the root state for single-sentence tasks or
// the matching features of a sentence pair.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sata/cells.hpp"
#include "sata/core/dropout.hpp"
#include "sata/core/error.hpp"
#include "sata/core/ops.hpp"

namespace sata {

enum class Task { classification, nli };

inline const char* to_string(Task t) { return t == Task::nli ? "nli" : "classification"; }
inline Task parse_task(const std::string& s) {
  if (s == "classification") return Task::classification;
  if (s == "nli") return Task::nli;
  throw ConfigError("unknown task '" + s + "' (classification, nli)");
}

struct HeadConfig {
  Task task = Task::classification;
  std::size_t d_s = 300;
  std::size_t num_classes = 2;
  bool batch_norm = true;
  double dropout = 0.0;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  void validate() const {
    if (d_s == 0) throw ConfigError("d_s must be positive");
    if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("classifier dropout must be in [0, 1)");
    if (bn_momentum <= 0.0 || bn_momentum > 1.0) throw ConfigError("bn_momentum must be in (0, 1]");
  }
  std::size_t input_width(std::size_t d_h) const { return task == Task::nli ? 4 * d_h : d_h; }
};

struct BatchStats {
  Tensor mean;
  Tensor var;  // biased
  std::size_t count = 0;
};

struct ClassifierParams {
  HeadConfig config;
  std::size_t input = 0;
  Parameter W_s;  // d_s x d_in
  Parameter b_s;  // d_s
  Parameter W_c;  // d_c x d_s
  Parameter b_c;  // d_c
  Tensor running_mean;
  Tensor running_var;

  static ClassifierParams make(std::size_t d_in, const HeadConfig& cfg, Rng& rng) {
    cfg.validate();
    ClassifierParams p;
    p.config = cfg;
    p.input = d_in;
    p.W_s = detail::he_weight("classifier.W_s", cfg.d_s, d_in, rng);
    p.b_s = detail::bias("classifier.b_s", cfg.d_s);
    p.W_c = detail::he_weight("classifier.W_c", cfg.num_classes, cfg.d_s, rng);
    p.b_c = detail::bias("classifier.b_c", cfg.num_classes);
    p.running_mean = Tensor({d_in}, 0.0);
    p.running_var = Tensor({d_in}, 1.0);
    return p;
  }

  std::vector<Parameter*> parameters() { return {&W_s, &b_s, &W_c, &b_c}; }

  // Folds batch statistics into the running estimates (unbiased variance).
  void update_running_stats(const BatchStats& stats) {
    if (stats.count < 2) return;
    const double m = config.bn_momentum;
    const double correction = static_cast<double>(stats.count) / static_cast<double>(stats.count - 1);
    for (std::size_t j = 0; j < input; ++j) {
      running_mean[j] = (1.0 - m) * running_mean[j] + m * stats.mean[j];
      running_var[j] = (1.0 - m) * running_var[j] + m * stats.var[j] * correction;
    }
  }
};

// Batch normalisation without affine parameters. Train mode with two or more
// inputs normalises with batch statistics (reported through stats); otherwise
// the running estimates are used.
inline std::vector<Var> batch_norm(std::span<const Var> xs, const ClassifierParams& p, const ForwardMode& mode,
                                   BatchStats* stats) {
  std::vector<Var> out;
  out.reserve(xs.size());
  if (xs.empty()) return out;
  Tape& tape = xs.front().tape();
  const double eps = p.config.bn_eps;
  if (mode.train && xs.size() >= 2) {
    Var mu = mean(xs);
    std::vector<Var> centered, squares;
    for (Var x : xs) {
      centered.push_back(sub(x, mu));
      squares.push_back(hadamard(centered.back(), centered.back()));
    }
    Var var = mean(squares);
    Var inv_std = pow(add_scalar(var, eps), -0.5);
    for (Var c : centered) out.push_back(hadamard(c, inv_std));
    if (stats) *stats = BatchStats{mu.value(), var.value(), xs.size()};
    return out;
  }
  Tensor shift(p.running_mean.shape()), factor(p.running_var.shape());
  for (std::size_t j = 0; j < factor.size(); ++j) {
    shift[j] = -p.running_mean[j];
    factor[j] = 1.0 / std::sqrt(p.running_var[j] + eps);
  }
  Var shift_v = tape.constant(shift);
  for (Var x : xs) out.push_back(mask(add(x, shift_v), factor));
  return out;
}

inline void require_head_input(Var x, const ClassifierParams& p) {
  if (x.size() != p.input || x.value().rank() != 1) {
    throw DimensionError("classifier expects input width " + std::to_string(p.input) + ", got " +
                         shape_string(x.shape()));
  }
}

// Layers after normalisation: W_c dropout(ReLU(W_s x + b_s)) + b_c.
inline Var classifier_mlp(Var x, ClassifierParams& p, const ForwardMode& mode) {
  Tape& t = x.tape();
  Var s = relu(add(matmul(t.param(p.W_s), x), t.param(p.b_s)));
  s = dropout(s, p.config.dropout, mode);
  return add(matmul(t.param(p.W_c), s), t.param(p.b_c));
}

// Normalised head inputs (identity when batch norm is off).
inline std::vector<Var> normalize_inputs(std::span<const Var> inputs, const ClassifierParams& p,
                                         const ForwardMode& mode, BatchStats* stats = nullptr) {
  for (Var x : inputs) require_head_input(x, p);
  if (p.config.batch_norm) return batch_norm(inputs, p, mode, stats);
  return std::vector<Var>(inputs.begin(), inputs.end());
}

// Logits for a batch of head inputs.
inline std::vector<Var> classifier_logits(std::span<const Var> inputs, ClassifierParams& p, const ForwardMode& mode,
                                          BatchStats* stats = nullptr) {
  std::vector<Var> out;
  for (Var x : normalize_inputs(inputs, p, mode, stats)) out.push_back(classifier_mlp(x, p, mode));
  return out;
}

inline Var classifier_logits(Var input, ClassifierParams& p, const ForwardMode& mode = {}) {
  return classifier_logits(std::span<const Var>(&input, 1), p, mode).front();
}

// Class distribution for one input.
inline Var classify(Var input, ClassifierParams& p, const ForwardMode& mode = {}) {
  return softmax(classifier_logits(input, p, mode));
}

// [p; h; |p - h|; p * h].
inline Var snli_features(Var premise, Var hypothesis) {
  if (premise.shape() != hypothesis.shape()) {
    throw DimensionError("snli_features: premise " + shape_string(premise.shape()) + " vs hypothesis " +
                         shape_string(hypothesis.shape()));
  }
  return concat({premise, hypothesis, abs(sub(premise, hypothesis)), hadamard(premise, hypothesis)});
}

// Mean of per-example losses.
inline Var mean_loss(std::span<const Var> losses) {
  return scale(add_all(losses), 1.0 / static_cast<double>(losses.size()));
}

}  // namespace sata
