// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference check of the complete model and loss.

#pragma once

#include <cstdint>

#include "mvlr/grad_check.hpp"
#include "mvlr/model.hpp"

namespace mvlr {

struct ModelGradCheck {
  GradCheckReport report;
  double selection_gap = 0.0;  // k-th minus (k+1)-th similarity at the checked point
  std::uint64_t point_seed = 0;
  double seconds = 0.0;
};

inline constexpr double kMinSelectionGap = 1e-3;

/// Draws a random point for ModelConfig::tiny() (16x16 input, random tail so
/// every parameter is reachable) and compares the analytic gradient of
/// total_loss against central differences over all parameters. Points whose
/// top-k selection gap is at most 1e-3 are skipped.
ModelGradCheck model_grad_check(std::uint64_t seed, double h = 1e-6,
                                ModelConfig config = ModelConfig::tiny(),
                                std::size_t image_size = 16);

}  // namespace mvlr
