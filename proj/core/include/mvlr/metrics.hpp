// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "mvlr/degradation.hpp"
#include "mvlr/tensor.hpp"

namespace mvlr {

/// Reported when the images are identical, instead of +inf.
inline constexpr double kPsnrCap = 100.0;
inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// 10 log10(peak^2 / MSE).
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);

/// Mean SSIM over channels and every fully contained 11x11 window (Gaussian
/// weights, sigma 1.5, C1 = (0.01 peak)^2, C2 = (0.03 peak)^2).
/// ValidationError when either side is smaller than the window.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);

/// Normalized 1D Gaussian taps used by ssim (the 2D window is their outer
/// product).
std::vector<double> gaussian_window(std::size_t size = kSsimWindow, double sigma = kSsimSigma);

struct EvalRecord {
  std::size_t index = 0;
  Weather weather = Weather::rain;
  double severity = 0.0;
  double psnr_degraded = 0.0;
  double psnr_restored = 0.0;
  double ssim_degraded = 0.0;
  double ssim_restored = 0.0;
};

struct EvalSummary {
  Weather weather = Weather::rain;
  std::size_t count = 0;
  double severity = 0.0;
  double psnr_degraded = 0.0;
  double psnr_restored = 0.0;
  double ssim_degraded = 0.0;
  double ssim_restored = 0.0;
};

/// Per-weather means, in rain/snow/haze/mixed order, skipping absent types.
std::vector<EvalSummary> summarize(const std::vector<EvalRecord>& records);

/// Columns index,weather,severity,psnr_deg,psnr_restored,ssim_deg,ssim_restored
/// followed by one "mean" row per weather type present.
void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRecord>& records);

}  // namespace mvlr
