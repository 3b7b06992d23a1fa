// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/imb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvlr/ops.hpp"
#include "mvlr/random.hpp"

namespace mvlr {

namespace {

void check_topk(std::size_t k, std::size_t capacity) {
  if (k < 1 || k > capacity) {
    throw ValidationError("top-k " + std::to_string(k) + " outside [1, " +
                          std::to_string(capacity) + "]");
  }
}

}  // namespace

template <typename T>
void MemoryBank<T>::validate() const {
  if (slots.rank() != 2) throw ShapeError("memory bank slots must be K x C, got " + to_string(slots.shape()));
  check_topk(topk, capacity());
}

template <typename T>
MemoryBank<T> make_memory_bank(std::size_t capacity, std::size_t dim, std::size_t topk,
                               std::uint64_t seed) {
  check_topk(topk, capacity);
  MemoryBank<T> bank;
  bank.slots = normal_tensor<T>({capacity, dim}, 1.0 / std::sqrt(static_cast<double>(dim)), seed);
  bank.topk = topk;
  return bank;
}

template <typename T>
Tensor<T> cosine_similarities(const Tensor<T>& query, const MemoryBank<T>& bank) {
  const std::size_t c = bank.dim();
  if (query.shape() != Shape{c}) {
    throw ShapeError("cosine_similarities: query " + to_string(query.shape()) +
                     " vs memory " + to_string(bank.slots.shape()));
  }
  double qq = 0.0;
  for (T v : query.data()) qq += static_cast<double>(v) * v;
  const double q_norm = std::max(std::sqrt(qq), kCosineNormFloor);
  Tensor<T> s({bank.capacity()});
  for (std::size_t i = 0; i < bank.capacity(); ++i) {
    const T* m = bank.slots.raw() + i * c;
    double dot = 0.0;
    double mm = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      dot += static_cast<double>(query[j]) * m[j];
      mm += static_cast<double>(m[j]) * m[j];
    }
    const double m_norm = std::max(std::sqrt(mm), kCosineNormFloor);
    s[i] = static_cast<T>(std::clamp(dot / (q_norm * m_norm), -1.0, 1.0));
  }
  return s;
}

template <typename T>
std::vector<std::size_t> top_k_select(const Tensor<T>& scores, std::size_t k) {
  if (scores.rank() != 1) {
    throw ShapeError("top_k_select: scores must be a vector, got " + to_string(scores.shape()));
  }
  check_topk(k, scores.size());
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto before = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
  idx.resize(k);
  return idx;
}

template <typename T>
Tensor<T> retrieve_prototype(const MemoryBank<T>& bank, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ValidationError("retrieve_prototype: no slots selected");
  std::vector<bool> seen(bank.capacity(), false);
  for (std::size_t i : indices) {
    if (i >= bank.capacity()) {
      throw ValidationError("retrieve_prototype: slot " + std::to_string(i) +
                            " out of range for capacity " + std::to_string(bank.capacity()));
    }
    if (seen[i]) throw ValidationError("retrieve_prototype: slot " + std::to_string(i) + " selected twice");
    seen[i] = true;
  }
  const std::size_t c = bank.dim();
  Tensor<T> proto({c});
  for (std::size_t i : indices) {
    const T* m = bank.slots.raw() + i * c;
    for (std::size_t j = 0; j < c; ++j) proto[j] += m[j];
  }
  const T inv = T{1} / static_cast<T>(indices.size());
  for (auto& v : proto.data()) v *= inv;
  return proto;
}

template <typename T>
Tensor<T> enhance(const Tensor<T>& x, const Tensor<T>& prototype) {
  if (x.rank() != 3 || prototype.shape() != Shape{x.dim(2)}) {
    throw ShapeError("enhance: features " + to_string(x.shape()) + " vs prototype " +
                     to_string(prototype.shape()));
  }
  Tensor<T> out = x;
  const std::size_t c = x.dim(2);
  const std::size_t positions = x.dim(0) * x.dim(1);
  for (std::size_t p = 0; p < positions; ++p) {
    T* px = out.raw() + p * c;
    for (std::size_t j = 0; j < c; ++j) px[j] += prototype[j];
  }
  return out;
}

template <typename T>
Tensor<T> imb_forward(const Tensor<T>& x, const MemoryBank<T>& bank, bool use_imb,
                      ImbTrace<T>* trace) {
  if (trace) {
    trace->applied = use_imb;
    trace->input_shape = x.shape();
  }
  if (!use_imb) return x;
  bank.validate();
  if (x.rank() != 3 || x.dim(2) != bank.dim()) {
    throw ShapeError("imb_forward: features " + to_string(x.shape()) + " vs memory " +
                     to_string(bank.slots.shape()));
  }
  Tensor<T> s = cosine_similarities(global_avg_pool(x), bank);
  std::vector<std::size_t> selected = top_k_select(s, bank.topk);
  Tensor<T> proto = retrieve_prototype<T>(bank, selected);
  Tensor<T> out = enhance(x, proto);
  if (trace) {
    trace->similarities = std::move(s);
    trace->selected = std::move(selected);
    trace->prototype = std::move(proto);
  }
  return out;
}

template <typename T>
Tensor<T> imb_backward(const ImbTrace<T>& trace, const Tensor<T>& d_enhanced,
                       Tensor<T>& d_slots) {
  if (d_enhanced.shape() != trace.input_shape) {
    throw ShapeError("imb_backward: upstream " + to_string(d_enhanced.shape()) + " vs input " +
                     to_string(trace.input_shape));
  }
  if (!trace.applied) return d_enhanced;
  const std::size_t c = d_enhanced.dim(2);
  const std::size_t positions = d_enhanced.dim(0) * d_enhanced.dim(1);
  Tensor<T> d_proto({c});
  for (std::size_t p = 0; p < positions; ++p) {
    const T* g = d_enhanced.raw() + p * c;
    for (std::size_t j = 0; j < c; ++j) d_proto[j] += g[j];
  }
  const T inv_k = T{1} / static_cast<T>(trace.selected.size());
  for (std::size_t i : trace.selected) {
    T* dm = d_slots.raw() + i * c;
    for (std::size_t j = 0; j < c; ++j) dm[j] += d_proto[j] * inv_k;
  }
  return d_enhanced;
}

#define MVLR_INSTANTIATE_IMB(T)                                                             \
  template struct MemoryBank<T>;                                                            \
  template MemoryBank<T> make_memory_bank(std::size_t, std::size_t, std::size_t,            \
                                          std::uint64_t);                                   \
  template Tensor<T> cosine_similarities(const Tensor<T>&, const MemoryBank<T>&);           \
  template std::vector<std::size_t> top_k_select(const Tensor<T>&, std::size_t);            \
  template Tensor<T> retrieve_prototype(const MemoryBank<T>&, std::span<const std::size_t>); \
  template Tensor<T> enhance(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> imb_forward(const Tensor<T>&, const MemoryBank<T>&, bool, ImbTrace<T>*); \
  template Tensor<T> imb_backward(const ImbTrace<T>&, const Tensor<T>&, Tensor<T>&);

MVLR_INSTANTIATE_IMB(float)
MVLR_INSTANTIATE_IMB(double)

#undef MVLR_INSTANTIATE_IMB

}  // namespace mvlr
