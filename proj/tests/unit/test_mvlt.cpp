// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>

#include "helpers.hpp"
#include "mvlr/mvlt.hpp"

using namespace mvlr;
using mvlr::test::randn;

namespace {

template <typename T>
bool same_bits(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.raw(), b.raw(), a.size() * sizeof(T)) == 0;
}

std::string message_of(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_mvlt<double>(bytes);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("header layout is magic, version, dtype, rank, dims, payload") {
  const Tensor<float> t({2, 3}, {1, 2, 3, 4, 5, 6});
  const auto bytes = encode_mvlt(t);
  REQUIRE(bytes.size() == 4 + 3 + 2 * 4 + 6 * 4);
  CHECK(std::memcmp(bytes.data(), "MVLT", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 2);
  CHECK(bytes[7] == 2);  // little-endian dim 0
  CHECK(bytes[8] == 0);
  CHECK(bytes[11] == 3);
  float first = 0;
  std::memcpy(&first, bytes.data() + 15, 4);
  CHECK(first == 1.0f);
}

TEST_CASE("round trip is bit exact for both precisions") {
  const auto d = randn({3, 4, 5}, 1);
  CHECK(same_bits(decode_mvlt<double>(encode_mvlt(d)), d));
  const auto f = d.cast<float>();
  CHECK(same_bits(decode_mvlt<float>(encode_mvlt(f)), f));
  const auto header = decode_mvlt_header(encode_mvlt(f));
  CHECK(header.dtype == DType::f32);
  CHECK(header.shape == Shape{3, 4, 5});
}

TEST_CASE("file round trip") {
  const auto dir = mvlr::test::scratch_dir("mvlt");
  const auto d = randn({7}, 2);
  write_mvlt(dir / "t.mvlt", d);
  CHECK(same_bits(read_mvlt<double>(dir / "t.mvlt"), d));
  CHECK_THROWS_AS(read_mvlt<double>(dir / "missing.mvlt"), IoError);
}

TEST_CASE("malformed headers name the offending field") {
  const auto good = encode_mvlt(randn({2, 2}, 3));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(message_of(bad_magic).find("magic") != std::string::npos);

  auto bad_version = good;
  bad_version[4] = 2;
  CHECK(message_of(bad_version).find("version") != std::string::npos);

  auto bad_dtype = good;
  bad_dtype[5] = 7;
  CHECK(message_of(bad_dtype).find("dtype") != std::string::npos);

  auto zero_rank = good;
  zero_rank[6] = 0;
  CHECK(message_of(zero_rank).find("rank") != std::string::npos);

  auto zero_dim = good;
  zero_dim[7] = 0;
  CHECK_THROWS_AS(decode_mvlt<double>(zero_dim), FormatError);

  const std::vector<std::uint8_t> tiny(good.begin(), good.begin() + 5);
  CHECK_THROWS_AS(decode_mvlt<double>(tiny), FormatError);
}

TEST_CASE("truncated payload reports expected and actual byte counts") {
  auto bytes = encode_mvlt(randn({2, 2}, 4));
  bytes.resize(bytes.size() - 3);
  const std::string msg = message_of(bytes);
  CHECK(msg.find("32") != std::string::npos);
  CHECK(msg.find("29") != std::string::npos);
}

TEST_CASE("decoding converts between precisions") {
  const Tensor<double> d({2}, {0.5, -2.25});
  const auto f = decode_mvlt<float>(encode_mvlt(d));
  CHECK(f[0] == 0.5f);
  CHECK(f[1] == -2.25f);
}
