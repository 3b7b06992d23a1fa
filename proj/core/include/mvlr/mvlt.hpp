// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// MVLT binary tensor files:
//   4 bytes  magic "MVLT"
//   1 byte   version (1)
//   1 byte   dtype (0 = float32, 1 = float64)
//   1 byte   rank
//   rank x   uint32 little-endian dimensions
//   payload  row-major little-endian values

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvlr/tensor.hpp"

namespace mvlr {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

inline constexpr std::uint8_t kMvltVersion = 1;

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::f32; }
template <>
constexpr DType dtype_of<double>() { return DType::f64; }

std::string to_string(DType dtype);

struct MvltHeader {
  DType dtype = DType::f64;
  Shape shape;
};

template <typename T>
std::vector<std::uint8_t> encode_mvlt(const Tensor<T>& tensor);

MvltHeader decode_mvlt_header(std::span<const std::uint8_t> bytes,
                              const std::string& source = "<memory>");

/// Decodes into T, converting when the stored dtype differs.
template <typename T>
Tensor<T> decode_mvlt(std::span<const std::uint8_t> bytes,
                      const std::string& source = "<memory>");

template <typename T>
void write_mvlt(const std::filesystem::path& path, const Tensor<T>& tensor);

template <typename T>
Tensor<T> read_mvlt(const std::filesystem::path& path);

MvltHeader read_mvlt_header(const std::filesystem::path& path);

// Whole-file helpers shared by the binary formats.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mvlr
