#pragma once

// Central-difference gradient checking against the tape.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sata/core/error.hpp"
#include "sata/core/tape.hpp"

namespace sata {

using LossFn = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

class GradCheckError : public NumericError {
 public:
  GradCheckError(const std::string& param, std::size_t index, const std::string& why)
      : NumericError("gradient check: " + why + " while perturbing " + param + "[" + std::to_string(index) + "]"),
        param_(param),
        index_(index) {}
  const std::string& param() const noexcept { return param_; }
  std::size_t index() const noexcept { return index_; }

 private:
  std::string param_;
  std::size_t index_;
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic) + std::abs(numeric));
}

inline double evaluate_loss(const LossFn& f) {
  Tape tape;
  return f(tape).value().item();
}

// Analytic gradient of f w.r.t. each parameter, written into Parameter::grad.
inline void analytic_gradients(const LossFn& f, std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
  Tape tape;
  tape.backward(f(tape));
}

// Central difference (f(x+eps) - f(x-eps)) / 2eps for every coordinate of p.
inline Tensor numeric_gradient(const LossFn& f, Parameter& p, double eps = 1e-5) {
  if (!(eps > 0)) throw std::invalid_argument("numeric_gradient: eps must be positive");
  Tensor out = Tensor::zeros_like(p.value);
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double saved = p.value[i];
    double plus = 0.0, minus = 0.0;
    try {
      p.value[i] = saved + eps;
      plus = evaluate_loss(f);
      p.value[i] = saved - eps;
      minus = evaluate_loss(f);
    } catch (const NumericError& e) {
      p.value[i] = saved;
      throw GradCheckError(p.name, i, e.what());
    }
    p.value[i] = saved;
    out[i] = (plus - minus) / (2.0 * eps);
    if (!std::isfinite(out[i])) throw GradCheckError(p.name, i, "non-finite difference");
  }
  return out;
}

// Compares gradients already stored in Parameter::grad against central
// differences.
inline GradCheckResult compare_with_numeric(const LossFn& f, std::span<Parameter* const> params, double eps = 1e-5) {
  GradCheckResult result;
  for (Parameter* p : params) {
    const Tensor analytic = p->grad;
    const Tensor numeric = numeric_gradient(f, *p, eps);
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      ++result.coordinates;
      const double err = relative_error(analytic[i], numeric[i]);
      if (result.param.empty() || err > result.max_rel_err) {
        result.max_rel_err = err;
        result.param = p->name;
        result.index = i;
        result.analytic = analytic[i];
        result.numeric = numeric[i];
      }
    }
  }
  return result;
}

// max over coordinates of |analytic - numeric| / max(1, |analytic| + |numeric|).
inline GradCheckResult grad_check(const LossFn& f, std::span<Parameter* const> params, double eps = 1e-5) {
  analytic_gradients(f, params);
  return compare_with_numeric(f, params, eps);
}

inline GradCheckResult grad_check(const LossFn& f, std::initializer_list<Parameter*> params, double eps = 1e-5) {
  return grad_check(f, std::span<Parameter* const>(params.begin(), params.size()), eps);
}

}  // namespace sata
