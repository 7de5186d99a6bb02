#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sata/core/error.hpp"
#include "sata/core/tape.hpp"

namespace sata {

// Global L2 norm over every gradient; scales all of them by max_norm / N when
// N exceeds max_norm. Returns the norm before clipping.
inline double clip_grad_norm(std::span<Parameter* const> params, double max_norm = 5.0) {
  if (!(max_norm > 0)) throw std::invalid_argument("clip_grad_norm: max_norm must be positive");
  double sq = 0.0;
  for (const Parameter* p : params)
    for (double g : p->grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (Parameter* p : params)
      for (double& g : p->grad.data()) g *= factor;
  }
  return norm;
}

inline bool grads_finite(std::span<Parameter* const> params) {
  for (const Parameter* p : params)
    if (!p->grad.all_finite()) return false;
  return true;
}

namespace detail {

inline void ensure_slots(std::vector<Tensor>& slots, std::span<Parameter* const> params) {
  if (slots.size() == params.size()) return;
  slots.clear();
  for (const Parameter* p : params) slots.push_back(Tensor::zeros_like(p->value));
}

// p <- p - lr * wd * p, skipped for parameters marked decay = false.
inline void decoupled_decay(Parameter& p, double lr, double weight_decay) {
  if (weight_decay == 0.0 || !p.decay) return;
  const double keep = 1.0 - lr * weight_decay;
  for (double& v : p.value.data()) v *= keep;
}

}  // namespace detail

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
};

// Bias-corrected Adam; decoupled weight decay follows the adaptive step. Non-finite gradients skip
// the step and return false.
inline bool adam_step(std::span<Parameter* const> params, AdamState& s, const AdamHyper& h) {
  if (!grads_finite(params)) return false;
  detail::ensure_slots(s.m, params);
  detail::ensure_slots(s.v, params);
  ++s.t;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(s.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = s.m[k];
    Tensor& v = s.v[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
      p.value[i] -= h.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + h.eps);
    }
    detail::decoupled_decay(p, h.lr, h.weight_decay);
  }
  return true;
}

struct AdadeltaHyper {
  double lr = 1.0;
  double rho = 0.95;
  double eps = 1e-6;
  double weight_decay = 0.0;
};

struct AdadeltaState {
  std::vector<Tensor> sq_grad;    // running E[g^2]
  std::vector<Tensor> sq_update;  // running E[dx^2]
};

// dx = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g, with E[g^2] updated
// before and E[dx^2] after the step.
inline bool adadelta_step(std::span<Parameter* const> params, AdadeltaState& s, const AdadeltaHyper& h) {
  if (!grads_finite(params)) return false;
  detail::ensure_slots(s.sq_grad, params);
  detail::ensure_slots(s.sq_update, params);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& eg = s.sq_grad[k];
    Tensor& ex = s.sq_update[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      eg[i] = h.rho * eg[i] + (1.0 - h.rho) * g * g;
      const double dx = -std::sqrt(ex[i] + h.eps) / std::sqrt(eg[i] + h.eps) * g;
      ex[i] = h.rho * ex[i] + (1.0 - h.rho) * dx * dx;
      p.value[i] += h.lr * dx;
    }
    detail::decoupled_decay(p, h.lr, h.weight_decay);
  }
  return true;
}

enum class OptimizerKind { adam, adadelta };

inline const char* to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "adadelta"; }
inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "adadelta") return OptimizerKind::adadelta;
  throw ConfigError("unknown optimizer '" + s + "' (adam, adadelta)");
}

// Optimizer state bound to a fixed parameter list.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, AdamHyper adam, AdadeltaHyper adadelta, std::vector<Parameter*> params)
      : kind_(kind), adam_(adam), adadelta_(adadelta), params_(std::move(params)) {}

  bool step() {
    return kind_ == OptimizerKind::adam ? adam_step(params_, adam_state_, adam_)
                                        : adadelta_step(params_, adadelta_state_, adadelta_);
  }

  const std::vector<Parameter*>& params() const noexcept { return params_; }

  // Named state for checkpoints: "<prefix>.<param>.<slot>" plus a step count.
  std::vector<std::pair<std::string, Tensor>> state_tensors() const {
    std::vector<std::pair<std::string, Tensor>> out;
    auto emit = [&](const std::vector<Tensor>& slots, const char* slot) {
      for (std::size_t k = 0; k < slots.size(); ++k) out.emplace_back("opt." + params_[k]->name + "." + slot, slots[k]);
    };
    if (kind_ == OptimizerKind::adam) {
      emit(adam_state_.m, "m");
      emit(adam_state_.v, "v");
      out.emplace_back("opt.step", Tensor::scalar(static_cast<double>(adam_state_.t)));
    } else {
      emit(adadelta_state_.sq_grad, "sq_grad");
      emit(adadelta_state_.sq_update, "sq_update");
    }
    return out;
  }

  template <class Lookup>
  void load_state(Lookup&& find) {
    auto fill = [&](std::vector<Tensor>& slots, const char* slot) {
      slots.clear();
      for (Parameter* p : params_) {
        const Tensor* t = find("opt." + p->name + "." + slot);
        if (t == nullptr) {
          slots.clear();
          return;
        }
        if (t->shape() != p->value.shape()) throw DimensionError("optimizer state shape mismatch for " + p->name);
        slots.push_back(*t);
      }
    };
    if (kind_ == OptimizerKind::adam) {
      fill(adam_state_.m, "m");
      fill(adam_state_.v, "v");
      const Tensor* t = find(std::string("opt.step"));
      adam_state_.t = t ? static_cast<std::uint64_t>(t->item()) : 0;
    } else {
      fill(adadelta_state_.sq_grad, "sq_grad");
      fill(adadelta_state_.sq_update, "sq_update");
    }
  }

 private:
  OptimizerKind kind_;
  AdamHyper adam_;
  AdadeltaHyper adadelta_;
  std::vector<Parameter*> params_;
  AdamState adam_state_;
  AdadeltaState adadelta_state_;
};

}  // namespace sata
