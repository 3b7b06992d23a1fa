// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvlr/random.hpp"
#include "mvlr/tensor.hpp"

namespace mvlr::test {

inline Tensor<double> randn(const Shape& shape, std::uint64_t seed, double stddev = 1.0) {
  return normal_tensor<double>(shape, stddev, seed);
}

inline Tensor<double> randu(const Shape& shape, std::uint64_t seed, double lo = 0.0,
                            double hi = 1.0) {
  return uniform_tensor<double>(shape, lo, hi, seed);
}

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// sum(w * y): a scalar whose gradient w.r.t. y is w, used to drive backward rules.
inline double weighted_sum(const Tensor<double>& y, const Tensor<double>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * w[i];
  return acc;
}

// Copy of a parameter struct with every tensor zeroed, for gradient buffers.
template <typename Params>
Params zeros_of(Params params) {
  ParamList<double> list;
  params.collect("", list);
  for (auto& p : list) p.tensor->fill(0.0);
  return params;
}

template <typename Params>
std::vector<Tensor<double>> tensors_of(Params& params) {
  ParamList<double> list;
  params.collect("", list);
  std::vector<Tensor<double>> out;
  for (auto& p : list) out.push_back(*p.tensor);
  return out;
}

template <typename Params>
ParamList<double> list_of(Params& params) {
  ParamList<double> list;
  params.collect("p", list);
  return list;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* base = std::getenv("MVLR_TEST_TMP");
  std::filesystem::path dir =
      (base ? std::filesystem::path(base) : std::filesystem::temp_directory_path()) /
      ("mvlr_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mvlr::test
