// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Implicit memory bank. A K x C table of prototype slots is queried with the
// spatial mean of the feature map; the k most cosine-similar slots are
// averaged into a prototype that is broadcast-added to every position.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvlr/tensor.hpp"

namespace mvlr {

inline constexpr std::size_t kDefaultImbCapacity = 512;
inline constexpr std::size_t kDefaultImbTopk = 32;
inline constexpr double kCosineNormFloor = 1e-12;

template <typename T>
struct MemoryBank {
  Tensor<T> slots;  // [K x C]
  std::size_t topk = kDefaultImbTopk;
  // Frozen banks are read-only; training refuses to update them.
  bool frozen = false;

  std::size_t capacity() const { return slots.dim(0); }
  std::size_t dim() const { return slots.dim(1); }

  void validate() const;

  void collect(const std::string& prefix, ParamList<T>& params) {
    params.push_back({prefix + ".slots", &slots});
  }
};

/// Slots ~ N(0, 1/sqrt(C)). ValidationError unless 1 <= topk <= capacity.
template <typename T>
MemoryBank<T> make_memory_bank(std::size_t capacity, std::size_t dim, std::size_t topk,
                               std::uint64_t seed);

/// s_i = q.m_i / (max(|q|, eps) max(|m_i|, eps)), clamped to [-1, 1].
template <typename T>
Tensor<T> cosine_similarities(const Tensor<T>& query, const MemoryBank<T>& bank);

/// Indices of the k largest scores, highest first; equal scores keep the
/// lower index first.
template <typename T>
std::vector<std::size_t> top_k_select(const Tensor<T>& scores, std::size_t k);

/// Mean of the selected slots. Indices must be distinct and in range.
template <typename T>
Tensor<T> retrieve_prototype(const MemoryBank<T>& bank, std::span<const std::size_t> indices);

/// X [H x W x C] + broadcast prototype [C].
template <typename T>
Tensor<T> enhance(const Tensor<T>& x, const Tensor<T>& prototype);

template <typename T>
struct ImbTrace {
  bool applied = false;
  Shape input_shape;
  Tensor<T> similarities;
  std::vector<std::size_t> selected;
  Tensor<T> prototype;
};

template <typename T>
Tensor<T> imb_forward(const Tensor<T>& x, const MemoryBank<T>& bank, bool use_imb,
                      ImbTrace<T>* trace = nullptr);

/// The selection is a constant of the backward pass, so the query path
/// carries no gradient: dX equals dX_hat, and each selected slot receives
/// (1/k) of the spatially summed upstream gradient. Unselected slots get 0.
template <typename T>
Tensor<T> imb_backward(const ImbTrace<T>& trace, const Tensor<T>& d_enhanced,
                       Tensor<T>& d_slots);

}  // namespace mvlr
