#pragma once

#include <random>

#include "sata/core/init.hpp"
#include "sata/core/ops.hpp"

namespace sata {

// Train mode enables dropout and batch statistics; rng drives the masks.
struct ForwardMode {
  bool train = false;
  Rng* rng = nullptr;

  static ForwardMode eval() { return {}; }
  static ForwardMode training(Rng& r) { return {true, &r}; }
};

// Inverted dropout: kept units are scaled by 1 / (1 - rate).
inline Var dropout(Var x, double rate, const ForwardMode& mode) {
  if (!mode.train || rate <= 0.0) return x;
  if (mode.rng == nullptr) throw std::logic_error("dropout in train mode needs an rng");
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor m(x.shape());
  const double scale = 1.0 / (1.0 - rate);
  for (double& v : m.data()) v = keep(*mode.rng) ? scale : 0.0;
  return mask(x, m);
}

}  // namespace sata
