// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic clean/degraded image pairs. Images are H x W x 3 in [0, 1].

#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

#include "mvlr/degradation.hpp"
#include "mvlr/tensor.hpp"

namespace mvlr {

using Image = Tensor<double>;

inline constexpr double kAirlight = 0.9;
inline constexpr double kHazeBetaPerSeverity = 3.0;
inline constexpr double kCoveragePerSeverity = 0.15;
inline constexpr std::size_t kMinSceneSize = 8;

/// Smooth gradients, rectangles and sinusoidal texture. Per-image standard
/// deviation is at least 0.05. ValidationError when H or W < 8.
Image gen_clean(std::uint64_t seed, std::size_t height, std::size_t width);

/// Scattering model I = J t + A (1 - t), t = exp(-3 severity d); depth d
/// falls linearly from 1 on the top row to 0 on the bottom row.
Image apply_haze(const Image& img, const DegradationSpec& spec);

/// Oriented bright streaks (one angle per seed, length proportional to
/// severity), alpha blended until 0.15 * severity of the pixels are covered.
Image apply_rain(const Image& img, const DegradationSpec& spec);

/// Elliptical white flecks with the same coverage rule as rain.
Image apply_snow(const Image& img, const DegradationSpec& spec);

/// Dispatch on spec.weather; mixed applies haze first, then rain.
Image degrade(const Image& img, const DegradationSpec& spec);

/// Pixels touched by the rain or snow overlay ([H x W], values 0/1).
Tensor<double> overlay_mask(std::size_t height, std::size_t width, const DegradationSpec& spec);

/// Fraction of non-zero entries in a mask.
double coverage(const Tensor<double>& mask);

struct WeatherMix {
  std::vector<std::pair<Weather, double>> weights;

  /// "rain,snow" (equal weights) or "rain:2,haze:1".
  static WeatherMix parse(std::string_view text);
  static WeatherMix uniform();
  static WeatherMix only(Weather weather);

  void validate() const;
  Weather sample(double u) const;  // u in [0, 1)
};

struct DatasetOptions {
  std::size_t count = 1;
  WeatherMix mix = WeatherMix::uniform();
  std::size_t height = 64;
  std::size_t width = 64;
  double severity_min = 0.3;
  double severity_max = 0.9;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ManifestRow {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  Weather weather = Weather::rain;
  double severity = 0.0;

  DegradationSpec spec() const { return {weather, severity, seed}; }
  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct DatasetSample {
  Image clean;
  Image degraded;
  DegradationSpec spec;
};

struct Dataset {
  std::vector<DatasetSample> samples;
  std::vector<ManifestRow> manifest;
};

Dataset make_dataset(const DatasetOptions& options);

void write_manifest_csv(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest_csv(const std::filesystem::path& path);

/// <dir>/clean_%05d.ppm, <dir>/deg_%05d.ppm and <dir>/manifest.csv.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace mvlr
