// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/mvlt.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace mvlr {

namespace {

constexpr std::uint8_t kMagic[4] = {'M', 'V', 'L', 'T'};
constexpr std::size_t kFixedHeader = 7;

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U bits) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return bits;
}

std::size_t element_bytes(DType dtype) { return dtype == DType::f32 ? 4 : 8; }

std::size_t header_bytes(const MvltHeader& h) { return kFixedHeader + 4 * h.shape.size(); }

template <typename S, typename T>
void decode_payload(const std::uint8_t* p, Tensor<T>& out) {
  using Bits = std::conditional_t<sizeof(S) == 4, std::uint32_t, std::uint64_t>;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<T>(std::bit_cast<S>(get_le<Bits>(p + i * sizeof(S))));
  }
}

}  // namespace

std::string to_string(DType dtype) { return dtype == DType::f32 ? "f32" : "f64"; }

template <typename T>
std::vector<std::uint8_t> encode_mvlt(const Tensor<T>& tensor) {
  if (tensor.rank() > std::numeric_limits<std::uint8_t>::max()) {
    throw FormatError("MVLT: rank " + std::to_string(tensor.rank()) + " exceeds 255");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFixedHeader + 4 * tensor.rank() + sizeof(T) * tensor.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kMvltVersion);
  out.push_back(static_cast<std::uint8_t>(dtype_of<T>()));
  out.push_back(static_cast<std::uint8_t>(tensor.rank()));
  for (std::size_t d : tensor.shape()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError("MVLT: dimension " + std::to_string(d) + " exceeds uint32");
    }
    put_le(out, static_cast<std::uint32_t>(d));
  }
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  for (T v : tensor.data()) put_le(out, std::bit_cast<Bits>(v));
  return out;
}

MvltHeader decode_mvlt_header(std::span<const std::uint8_t> bytes, const std::string& source) {
  if (bytes.size() < kFixedHeader) {
    throw FormatError(source + ": MVLT header needs " + std::to_string(kFixedHeader) +
                      " bytes, file has " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(source + ": bad magic, expected 'MVLT'");
  }
  if (bytes[4] != kMvltVersion) {
    throw FormatError(source + ": unsupported version " + std::to_string(bytes[4]) +
                      ", expected " + std::to_string(kMvltVersion));
  }
  if (bytes[5] > 1) {
    throw FormatError(source + ": unknown dtype " + std::to_string(bytes[5]));
  }
  MvltHeader h;
  h.dtype = static_cast<DType>(bytes[5]);
  const std::size_t rank = bytes[6];
  if (rank == 0) throw FormatError(source + ": rank 0 is not a valid tensor rank");
  if (bytes.size() < kFixedHeader + 4 * rank) {
    throw FormatError(source + ": truncated dimension list for rank " + std::to_string(rank));
  }
  for (std::size_t i = 0; i < rank; ++i) {
    const auto d = get_le<std::uint32_t>(bytes.data() + kFixedHeader + 4 * i);
    if (d == 0) throw FormatError(source + ": dimension " + std::to_string(i) + " is zero");
    h.shape.push_back(d);
  }
  return h;
}

template <typename T>
Tensor<T> decode_mvlt(std::span<const std::uint8_t> bytes, const std::string& source) {
  const MvltHeader h = decode_mvlt_header(bytes, source);
  const std::size_t offset = header_bytes(h);
  const std::size_t expected = shape_size(h.shape) * element_bytes(h.dtype);
  const std::size_t actual = bytes.size() - offset;
  if (actual != expected) {
    throw FormatError(source + ": payload size mismatch, expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(actual));
  }
  Tensor<T> out(h.shape);
  if (h.dtype == DType::f32) {
    decode_payload<float>(bytes.data() + offset, out);
  } else {
    decode_payload<double>(bytes.data() + offset, out);
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

template <typename T>
void write_mvlt(const std::filesystem::path& path, const Tensor<T>& tensor) {
  write_file_bytes(path, encode_mvlt(tensor));
}

template <typename T>
Tensor<T> read_mvlt(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_mvlt<T>(bytes, path.string());
}

MvltHeader read_mvlt_header(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_mvlt_header(bytes, path.string());
}

template std::vector<std::uint8_t> encode_mvlt(const Tensor<float>&);
template std::vector<std::uint8_t> encode_mvlt(const Tensor<double>&);
template Tensor<float> decode_mvlt(std::span<const std::uint8_t>, const std::string&);
template Tensor<double> decode_mvlt(std::span<const std::uint8_t>, const std::string&);
template void write_mvlt(const std::filesystem::path&, const Tensor<float>&);
template void write_mvlt(const std::filesystem::path&, const Tensor<double>&);
template Tensor<float> read_mvlt(const std::filesystem::path&);
template Tensor<double> read_mvlt(const std::filesystem::path&);

}  // namespace mvlr
