// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mvlr/tensor.hpp"

namespace mvlr {

/// Binary PPM (P6, maxval 255). Values map to round(255 v) after clamping to
/// [0, 1]; reading divides by maxval.
std::vector<std::uint8_t> encode_ppm(const Tensor<double>& img);
Tensor<double> decode_ppm(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

void write_ppm(const std::filesystem::path& path, const Tensor<double>& img);
Tensor<double> read_ppm(const std::filesystem::path& path);

/// Rounds every value to the nearest k/255, matching a PPM round trip.
Tensor<double> quantize_8bit(const Tensor<double>& img);

}  // namespace mvlr
