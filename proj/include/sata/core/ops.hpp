#pragma once

// Differentiable operations on tape variables. Vectors are rank-1 tensors;
// matrices are rank-2 and row-major.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sata/core/error.hpp"
#include "sata/core/tape.hpp"
#include "sata/core/tensor.hpp"

namespace sata {

namespace detail {

inline void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw std::logic_error("operands live on different tapes");
}

inline double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <class Forward, class Derivative>
Var unary_elementwise(Var x, Forward forward, Derivative derivative) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = forward(in[i]);
  const std::size_t xi = x.id();
  return x.tape().push(std::move(out), [xi, derivative](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    const Tensor& input = t.value(xi);
    const Tensor& output = t.value(self);
    Tensor& acc = t.accumulator(xi);
    for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * derivative(input[i], output[i]);
  });
}

}  // namespace detail

// [m x k] * [k x n] -> [m x n]; [m x k] * [k] -> [m].
inline Var matmul(Var a, Var b) {
  detail::require_same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() > 2 || A.cols() != B.rows()) {
    throw DimensionError("matmul: incompatible shapes " + shape_string(A.shape()) + " and " +
                         shape_string(B.shape()));
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out(B.rank() == 1 ? Shape{m} : Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  }
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().push(std::move(out), [ai, bi, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    const Tensor& Av = t.value(ai);
    const Tensor& Bv = t.value(bi);
    {
      Tensor& dA = t.accumulator(ai);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * Bv[p * n + j];
          dA[i * k + p] += s;
        }
    }
    Tensor& dB = t.accumulator(bi);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = Av[i * k + p];
        for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += aip * g[i * n + j];
      }
  });
}

inline Var add(Var a, Var b) {
  detail::require_same_tape(a, b);
  Tensor::require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out += b.value();
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().push(std::move(out), [ai, bi](Tape& t, std::size_t self) {
    const Tensor g = t.upstream(self);
    t.accumulator(ai) += g;
    t.accumulator(bi) += g;
  });
}

inline Var sub(Var a, Var b) {
  detail::require_same_tape(a, b);
  Tensor::require_same_shape(a.value(), b.value(), "sub");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] - B[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().push(std::move(out), [ai, bi](Tape& t, std::size_t self) {
    const Tensor g = t.upstream(self);
    t.accumulator(ai) += g;
    Tensor& dB = t.accumulator(bi);
    for (std::size_t i = 0; i < g.size(); ++i) dB[i] -= g[i];
  });
}

inline Var hadamard(Var a, Var b) {
  detail::require_same_tape(a, b);
  Tensor::require_same_shape(a.value(), b.value(), "hadamard");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * B[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().push(std::move(out), [ai, bi](Tape& t, std::size_t self) {
    const Tensor g = t.upstream(self);
    const Tensor& Av = t.value(ai);
    const Tensor& Bv = t.value(bi);
    {
      Tensor& dA = t.accumulator(ai);
      for (std::size_t i = 0; i < g.size(); ++i) dA[i] += g[i] * Bv[i];
    }
    Tensor& dB = t.accumulator(bi);
    for (std::size_t i = 0; i < g.size(); ++i) dB[i] += g[i] * Av[i];
  });
}

// Elementwise product with a constant (dropout masks).
inline Var mask(Var x, const Tensor& m) {
  Tensor::require_same_shape(x.value(), m, "mask");
  return hadamard(x, x.tape().constant(m));
}

inline Var scale(Var x, double factor) {
  return detail::unary_elementwise(
      x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

inline Var add_scalar(Var x, double offset) {
  return detail::unary_elementwise(
      x, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

inline Var sigmoid(Var x) {
  return detail::unary_elementwise(
      x, detail::stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

inline Var tanh(Var x) {
  return detail::unary_elementwise(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

inline Var relu(Var x) {
  return detail::unary_elementwise(
      x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

// Subgradient at 0 is 0.
inline Var abs(Var x) {
  return detail::unary_elementwise(
      x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

// x^p for x > 0 (used for 1/sqrt in batch norm).
inline Var pow(Var x, double p) {
  return detail::unary_elementwise(
      x, [p](double v) { return std::pow(v, p); }, [p](double v, double) { return p * std::pow(v, p - 1.0); });
}

// Softmax over the last axis, max-subtracted.
inline Var softmax(Var x) {
  const Tensor& in = x.value();
  const std::size_t width = in.rank() == 1 ? in.size() : in.shape().back();
  const std::size_t groups = in.size() / width;
  Tensor out(in.shape());
  for (std::size_t r = 0; r < groups; ++r) {
    const double* row = in.data().data() + r * width;
    const double peak = *std::max_element(row, row + width);
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) total += (out[r * width + j] = std::exp(row[j] - peak));
    for (std::size_t j = 0; j < width; ++j) out[r * width + j] /= total;
  }
  const std::size_t xi = x.id();
  return x.tape().push(std::move(out), [xi, width, groups](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    const Tensor& y = t.value(self);
    Tensor& acc = t.accumulator(xi);
    for (std::size_t r = 0; r < groups; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < width; ++j) dot += g[r * width + j] * y[r * width + j];
      for (std::size_t j = 0; j < width; ++j) acc[r * width + j] += y[r * width + j] * (g[r * width + j] - dot);
    }
  });
}

inline Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  std::vector<double> values;
  std::vector<std::size_t> ids, sizes;
  for (const Var& p : parts) {
    detail::require_same_tape(parts.front(), p);
    if (p.value().rank() != 1) throw DimensionError("concat expects vectors, got " + shape_string(p.shape()));
    values.insert(values.end(), p.value().data().begin(), p.value().data().end());
    ids.push_back(p.id());
    sizes.push_back(p.size());
  }
  return parts.front().tape().push(Tensor::vector(std::move(values)), [ids, sizes](Tape& t, std::size_t self) {
    const Tensor g = t.upstream(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Tensor& acc = t.accumulator(ids[k]);
      for (std::size_t j = 0; j < sizes[k]; ++j) acc[j] += g[offset + j];
      offset += sizes[k];
    }
  });
}

inline Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

// Elements [begin, end) of a vector.
inline Var slice(Var x, std::size_t begin, std::size_t end) {
  const Tensor& in = x.value();
  if (in.rank() != 1 || begin >= end || end > in.size()) {
    throw DimensionError("slice [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                         shape_string(in.shape()));
  }
  std::vector<double> values(in.data().begin() + static_cast<std::ptrdiff_t>(begin),
                             in.data().begin() + static_cast<std::ptrdiff_t>(end));
  const std::size_t xi = x.id();
  return x.tape().push(Tensor::vector(std::move(values)), [xi, begin](Tape& t, std::size_t self) {
    const Tensor& g = t.upstream(self);
    Tensor& acc = t.accumulator(xi);
    for (std::size_t j = 0; j < g.size(); ++j) acc[begin + j] += g[j];
  });
}

inline Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const std::size_t xi = x.id();
  return x.tape().push(Tensor::scalar(total), [xi](Tape& t, std::size_t self) {
    const double g = t.upstream(self)[0];
    Tensor& acc = t.accumulator(xi);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g;
  });
}

// Elementwise mean of equally-shaped variables.
inline Var mean(std::span<const Var> xs) {
  if (xs.empty()) throw DimensionError("mean of zero tensors");
  Tensor out(xs.front().shape());
  std::vector<std::size_t> ids;
  for (const Var& x : xs) {
    detail::require_same_tape(xs.front(), x);
    out += x.value();
    ids.push_back(x.id());
  }
  const double inv = 1.0 / static_cast<double>(xs.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= inv;
  return xs.front().tape().push(std::move(out), [ids, inv](Tape& t, std::size_t self) {
    const Tensor g = t.upstream(self);
    for (std::size_t id : ids) {
      Tensor& acc = t.accumulator(id);
      for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * inv;
    }
  });
}

// -log softmax(logits)[label], evaluated with log-sum-exp.
inline Var cross_entropy(Var logits, std::size_t label) {
  const Tensor& z = logits.value();
  if (z.rank() != 1) throw DimensionError("cross_entropy expects a logit vector");
  if (label >= z.size()) {
    throw std::out_of_range("label " + std::to_string(label) + " out of range for " + std::to_string(z.size()) +
                            " classes");
  }
  const double peak = *std::max_element(z.data().begin(), z.data().end());
  double total = 0.0;
  for (double v : z.data()) total += std::exp(v - peak);
  const double lse = peak + std::log(total);
  const std::size_t zi = logits.id();
  return logits.tape().push(Tensor::scalar(lse - z[label]), [zi, label, lse](Tape& t, std::size_t self) {
    const double g = t.upstream(self)[0];
    const Tensor& zv = t.value(zi);
    Tensor& acc = t.accumulator(zi);
    for (std::size_t j = 0; j < zv.size(); ++j) acc[j] += g * (std::exp(zv[j] - lse) - (j == label ? 1.0 : 0.0));
  });
}

// Sum of a list of scalars.
inline Var add_all(std::span<const Var> xs) {
  if (xs.empty()) throw DimensionError("add_all of zero tensors");
  Var total = xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i) total = add(total, xs[i]);
  return total;
}

}  // namespace sata
