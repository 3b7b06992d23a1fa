// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mvlr {

namespace {

void check_step(double h) {
  if (!(h >= kMinGradCheckStep && h <= kMaxGradCheckStep)) {
    std::ostringstream os;
    os << "grad_check step " << h << " outside [" << kMinGradCheckStep << ", "
       << kMaxGradCheckStep << "]";
    throw ValidationError(os.str());
  }
}

double finite_or_throw(double v, const char* where) {
  if (!std::isfinite(v)) {
    throw EvaluationError(std::string("non-finite function value ") + where);
  }
  return v;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

}  // namespace

double grad_check(const ScalarFunction& f, const Tensor<double>& x, double h) {
  check_step(h);
  Tensor<double> analytic(x.shape());
  finite_or_throw(f(x, &analytic), "at the check point");
  if (analytic.shape() != x.shape()) {
    throw ShapeError("grad_check: gradient shape " + to_string(analytic.shape()) +
                     " differs from input " + to_string(x.shape()));
  }
  Tensor<double> probe = x;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = finite_or_throw(f(probe, nullptr), "at x + h");
    probe[i] = saved - h;
    const double down = finite_or_throw(f(probe, nullptr), "at x - h");
    probe[i] = saved;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

GradCheckReport grad_check_params(const std::function<double()>& loss,
                                  std::span<const NamedTensor<double>> params,
                                  std::span<const Tensor<double>> analytic,
                                  double h) {
  check_step(h);
  if (params.size() != analytic.size()) {
    throw ValidationError("grad_check_params: " + std::to_string(params.size()) +
                          " parameters but " + std::to_string(analytic.size()) +
                          " gradients");
  }
  finite_or_throw(loss(), "at the check point");
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor<double>& t = *params[p].tensor;
    if (analytic[p].shape() != t.shape()) {
      throw ShapeError("grad_check_params: gradient of " + params[p].name + " has shape " +
                       to_string(analytic[p].shape()) + ", parameter has " +
                       to_string(t.shape()));
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + h;
      const double up = loss();
      t[i] = saved - h;
      const double down = loss();
      t[i] = saved;
      finite_or_throw(up, "at x + h");
      finite_or_throw(down, "at x - h");
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic[p][i], numeric);
      ++report.coordinates;
      if (report.coordinates == 1 || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_tensor = params[p].name;
        report.worst_index = i;
        report.worst_analytic = analytic[p][i];
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace mvlr
