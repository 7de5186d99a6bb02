#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>

#include "sata/core/error.hpp"
#include "sata/core/tensor.hpp"

namespace sata {

using Rng = std::mt19937_64;

// Zero-mean normal with std sqrt(2 / fan_in).
inline Tensor he_init(const Shape& shape, std::size_t fan_in, Rng& rng) {
  if (fan_in == 0) throw DimensionError("he_init: fan_in must be positive");
  Tensor out(shape);
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (double& v : out.data()) v = dist(rng);
  return out;
}

// Values in [lo, hi].
inline Tensor uniform_init(const Shape& shape, double lo, double hi, Rng& rng) {
  if (!(lo < hi)) throw DimensionError("uniform_init: need lo < hi");
  Tensor out(shape);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : out.data()) v = dist(rng);
  return out;
}

}  // namespace sata
