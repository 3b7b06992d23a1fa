// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared building blocks for the encoder and decoder: affine layers, layer
// normalization parameters and a pre-norm single-head transformer block.

#pragma once

#include <cstdint>
#include <string>

#include "mvlr/ops.hpp"
#include "mvlr/tensor.hpp"

namespace mvlr {

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in x out]
  Tensor<T> bias;    // [out]

  std::size_t in_dim() const { return weight.dim(0); }
  std::size_t out_dim() const { return weight.dim(1); }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".weight", &weight});
    out.push_back({prefix + ".bias", &bias});
  }
};

/// Weights ~ N(0, stddev), zero bias. stddev <= 0 selects 1/sqrt(in).
template <typename T>
Linear<T> make_linear(std::size_t in, std::size_t out, std::uint64_t seed, double stddev = 0.0);

template <typename T>
Tensor<T> linear_forward(const Linear<T>& layer, const Tensor<T>& x);

/// Accumulates weight/bias gradients into `grad`; returns dx (empty when
/// need_dx is false).
template <typename T>
Tensor<T> linear_backward(const Linear<T>& layer, const Tensor<T>& x, const Tensor<T>& dy,
                          Linear<T>& grad, bool need_dx = true);

template <typename T>
struct LayerNormParams {
  Tensor<T> gamma;
  Tensor<T> beta;

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".gamma", &gamma});
    out.push_back({prefix + ".beta", &beta});
  }
};

template <typename T>
LayerNormParams<T> make_layer_norm(std::size_t dim);

/// y = h + FFN(LN2(h)), h = x + Attn(LN1(x)), single head over all tokens.
template <typename T>
struct TransformerBlock {
  LayerNormParams<T> norm1;
  Tensor<T> query;   // [C x C]
  Tensor<T> key;     // [C x C]
  Tensor<T> value;   // [C x C]
  Tensor<T> output;  // [C x C]
  LayerNormParams<T> norm2;
  Linear<T> ff_in;   // C -> hidden
  Linear<T> ff_out;  // hidden -> C

  std::size_t dim() const { return query.dim(0); }

  void collect(const std::string& prefix, ParamList<T>& out) {
    norm1.collect(prefix + ".norm1", out);
    out.push_back({prefix + ".query", &query});
    out.push_back({prefix + ".key", &key});
    out.push_back({prefix + ".value", &value});
    out.push_back({prefix + ".output", &output});
    norm2.collect(prefix + ".norm2", out);
    ff_in.collect(prefix + ".ff_in", out);
    ff_out.collect(prefix + ".ff_out", out);
  }
};

template <typename T>
TransformerBlock<T> make_transformer_block(std::size_t dim, std::size_t hidden,
                                           std::uint64_t seed);

template <typename T>
struct BlockCache {
  Tensor<T> input;
  LayerNormCache<T> ln1;
  Tensor<T> normed1;
  Tensor<T> q, k, v;
  Tensor<T> attention;
  Tensor<T> context;
  Tensor<T> mid;
  LayerNormCache<T> ln2;
  Tensor<T> normed2;
  Tensor<T> hidden_pre;
  Tensor<T> hidden;
};

/// x [N x C] -> [N x C].
template <typename T>
Tensor<T> block_forward(const TransformerBlock<T>& block, const Tensor<T>& x,
                        BlockCache<T>* cache = nullptr);

template <typename T>
Tensor<T> block_backward(const TransformerBlock<T>& block, const BlockCache<T>& cache,
                         const Tensor<T>& dy, TransformerBlock<T>& grad);

}  // namespace mvlr
