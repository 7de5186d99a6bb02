#pragma once

// Define-by-run reverse-mode differentiation. A Tape records every value
// computed during a forward pass together with a closure that pushes the
// node's gradient back to its inputs. Nodes are appended in evaluation order,
// so walking the tape backwards from the loss is a reverse topological order.

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sata/core/error.hpp"
#include "sata/core/tensor.hpp"

namespace sata {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
  // Whether decoupled weight decay applies (off for biases and embeddings).
  bool decay = true;

  Parameter() = default;
  Parameter(std::string n, Tensor v, bool decays = true)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)), decay(decays) {}

  void zero_grad() { grad = Tensor::zeros_like(value); }
  std::size_t size() const noexcept { return value.size(); }
};

// Gradient produced by one tape for one parameter (row >= 0 for a single
// embedding row). Workers hand these to the aggregator instead of writing
// into Parameter::grad themselves.
struct GradContribution {
  Parameter* param = nullptr;
  std::ptrdiff_t row = -1;
  Tensor grad;
};

inline void apply_contribution(const GradContribution& contribution) {
  Parameter& p = *contribution.param;
  if (!p.trainable) return;
  if (p.grad.shape() != p.value.shape()) p.zero_grad();
  if (contribution.row < 0) {
    p.grad += contribution.grad;
    return;
  }
  const std::size_t cols = p.value.cols();
  const std::size_t offset = static_cast<std::size_t>(contribution.row) * cols;
  for (std::size_t j = 0; j < cols; ++j) p.grad[offset + j] += contribution.grad[j];
}

class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  inline const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) { return push(std::move(value), nullptr); }

  // One leaf node per parameter per tape, however many times it is used.
  Var param(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
    Var v = push(p.value, nullptr);
    nodes_[v.id()].param = &p;
    param_nodes_.emplace(&p, v.id());
    return v;
  }

  // Leaf holding one row of a matrix parameter (embedding lookup). Only that
  // row receives gradient.
  Var row(Parameter& p, std::size_t r) {
    if (p.value.rank() != 2) throw DimensionError("row lookup on non-matrix " + p.name);
    if (r >= p.value.rows()) {
      throw DimensionError("row " + std::to_string(r) + " out of range for " + p.name + " " +
                           shape_string(p.value.shape()));
    }
    const std::size_t cols = p.value.cols();
    std::vector<double> values(p.value.data().begin() + static_cast<std::ptrdiff_t>(r * cols),
                               p.value.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    Var v = push(Tensor::vector(std::move(values)), nullptr);
    nodes_[v.id()].param = &p;
    nodes_[v.id()].row = static_cast<std::ptrdiff_t>(r);
    return v;
  }

  Var push(Tensor value, Backward backward) {
    if (!value.all_finite()) {
      throw NumericError("non-finite value produced at tape node " + std::to_string(nodes_.size()));
    }
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(backward)});
    return Var(this, nodes_.size() - 1);
  }

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  const Tensor& value(Var v) const { return value(v.id()); }

  // Gradient of the last backward pass w.r.t. a node; empty if unreached.
  const Tensor& grad(Var v) const { return nodes_.at(v.id()).grad; }

  // Used by backward closures: the node's own incoming gradient...
  const Tensor& upstream(std::size_t id) const { return nodes_[id].grad; }
  // ...and the accumulation buffer of an input, allocated on first use.
  Tensor& accumulator(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
    return n.grad;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  // Runs the reverse pass and adds the result into Parameter::grad of every
  // trainable parameter reached. Repeated calls accumulate.
  void backward(Var loss) {
    for (const GradContribution& c : gradients(loss)) apply_contribution(c);
  }

  // Runs the reverse pass and returns per-parameter gradients without
  // touching the parameters.
  std::vector<GradContribution> gradients(Var loss) {
    propagate(loss);
    std::vector<GradContribution> out;
    for (std::size_t i = 0; i <= loss.id(); ++i) {
      Node& n = nodes_[i];
      if (n.param == nullptr || n.grad.empty() || !n.param->trainable) continue;
      out.push_back(GradContribution{n.param, n.row, n.grad});
    }
    return out;
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    Parameter* param = nullptr;
    std::ptrdiff_t row = -1;
  };

  void propagate(Var loss) {
    if (loss.valid() && &loss.tape() != this) throw std::logic_error("loss belongs to another tape");
    if (value(loss).size() != 1) {
      throw DimensionError("backward needs a scalar loss, got " + shape_string(value(loss).shape()));
    }
    for (Node& n : nodes_) n.grad = Tensor{};
    accumulator(loss.id())[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty() || !n.backward) continue;
      n.backward(*this, i);
    }
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace sata
