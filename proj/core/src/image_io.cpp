// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "mvlr/mvlt.hpp"

namespace mvlr {

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  std::size_t next_number(const char* field) {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1u << 24)) throw FormatError(source_ + ": PPM " + field + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw FormatError(source_ + ": PPM header is missing " + field);
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError(source_ + ": PPM header not terminated by whitespace");
    }
    return pos_ + 1;
  }

  std::size_t pos_ = 2;

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  const std::string& source_;
};

}  // namespace

std::vector<std::uint8_t> encode_ppm(const Tensor<double>& img) {
  if (img.rank() != 3 || img.dim(2) != 3) {
    throw ShapeError("encode_ppm: expected H x W x 3, got " + to_string(img.shape()));
  }
  const std::string header =
      "P6\n" + std::to_string(img.dim(1)) + " " + std::to_string(img.dim(0)) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + img.size());
  for (double v : img.data()) out.push_back(to_byte(v));
  return out;
}

Tensor<double> decode_ppm(std::span<const std::uint8_t> bytes, const std::string& source) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw FormatError(source + ": not a binary PPM (expected magic 'P6')");
  }
  HeaderReader reader(bytes, source);
  const std::size_t width = reader.next_number("width");
  const std::size_t height = reader.next_number("height");
  const std::size_t maxval = reader.next_number("maxval");
  if (width == 0 || height == 0) throw FormatError(source + ": PPM has a zero dimension");
  if (maxval == 0 || maxval > 255) {
    throw FormatError(source + ": unsupported PPM maxval " + std::to_string(maxval));
  }
  const std::size_t offset = reader.raster_offset();
  const std::size_t expected = width * height * 3;
  if (bytes.size() - offset != expected) {
    throw FormatError(source + ": PPM raster size mismatch, expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(bytes.size() - offset));
  }
  Tensor<double> img({height, width, 3});
  const auto scale = static_cast<double>(maxval);
  for (std::size_t i = 0; i < expected; ++i) img[i] = bytes[offset + i] / scale;
  return img;
}

void write_ppm(const std::filesystem::path& path, const Tensor<double>& img) {
  write_file_bytes(path, encode_ppm(img));
}

Tensor<double> read_ppm(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_ppm(bytes, path.string());
}

Tensor<double> quantize_8bit(const Tensor<double>& img) {
  Tensor<double> out = img;
  for (auto& v : out.data()) v = to_byte(v) / 255.0;
  return out;
}

}  // namespace mvlr
