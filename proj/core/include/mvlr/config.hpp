// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat `key = value` configuration files with `#` comments.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvlr/synth.hpp"
#include "mvlr/training.hpp"

namespace mvlr {

class FlatConfig {
 public:
  /// ValidationError on a line without '=' or with an empty key, and on a
  /// key that appears twice.
  static FlatConfig parse(std::string_view text, const std::string& source = "<config>");
  /// IoError naming the path when it cannot be read.
  static FlatConfig load(const std::filesystem::path& path);

  const std::string* find(std::string_view key) const;
  void set(std::string key, std::string value);
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

  std::string to_text() const;

 private:
  std::string source_ = "<config>";
  std::vector<std::pair<std::string, std::string>> entries_;
};

enum class Precision { f32, f64 };

std::string_view to_string(Precision precision);
Precision parse_precision(std::string_view text);

struct DataConfig {
  std::size_t train_count = 200;
  std::size_t val_count = 50;
  std::size_t height = 64;
  std::size_t width = 64;
  double severity_min = 0.3;
  double severity_max = 0.9;
  WeatherMix mix = WeatherMix::uniform();
  std::optional<std::uint64_t> seed;  // defaults to the run seed

  DatasetOptions train_options(std::uint64_t run_seed) const;
  DatasetOptions val_options(std::uint64_t run_seed) const;
};

struct ExperimentConfig {
  TrainConfig train;
  DataConfig data;
  Precision precision = Precision::f32;
};

/// Overlays every key of `flat` onto `base`. Unknown keys and malformed
/// values raise ValidationError naming the key.
ExperimentConfig apply_config(const FlatConfig& flat, ExperimentConfig base = {});

/// Model architecture keys (model.*, use_prior, use_imb, imb.*).
FlatConfig model_config_entries(const ModelConfig& model, bool bank_frozen);
/// Inverse of model_config_entries; returns the frozen flag via `bank_frozen`.
ModelConfig parse_model_config(const FlatConfig& flat, bool* bank_frozen = nullptr);

FlatConfig experiment_config_entries(const ExperimentConfig& config);

}  // namespace mvlr
