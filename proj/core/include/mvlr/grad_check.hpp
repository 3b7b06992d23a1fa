// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "mvlr/tensor.hpp"

namespace mvlr {

/// Scalar function of a tensor. When `grad` is non-null the function also
/// writes its analytic gradient there (same shape as x).
using ScalarFunction = std::function<double(const Tensor<double>& x, Tensor<double>* grad)>;

inline constexpr double kMinGradCheckStep = 1e-7;
inline constexpr double kMaxGradCheckStep = 1e-4;

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
/// Throws EvaluationError when f(x) is not finite, ValidationError when h is
/// outside [1e-7, 1e-4].
double grad_check(const ScalarFunction& f, const Tensor<double>& x, double h = 1e-6);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Same measure as grad_check, over a set of parameter tensors perturbed in
/// place. `loss` reads the current parameter values; `analytic[i]` is the
/// gradient for `params[i]`. Parameters are restored before returning.
GradCheckReport grad_check_params(const std::function<double()>& loss,
                                  std::span<const NamedTensor<double>> params,
                                  std::span<const Tensor<double>> analytic,
                                  double h = 1e-6);

}  // namespace mvlr
