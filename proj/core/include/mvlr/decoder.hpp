// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "mvlr/layers.hpp"

namespace mvlr {

/// Transformer blocks over the enhanced tokens, a per-token projection back
/// to pixel patches, then a 3x3 convolution tail. The result is a residual on
/// the degraded input:  out = clamp(img + tail(unpatch(blocks(X_hat))), 0, 1).
template <typename T>
struct DecoderParams {
  std::size_t patch_size = 4;
  std::vector<TransformerBlock<T>> blocks;
  Linear<T> unpatch;      // C_feat -> p*p*3
  Tensor<T> tail_weight;  // [27 x 3], rows ordered (ky, kx, c_in)
  Tensor<T> tail_bias;    // [3]

  std::size_t feat_dim() const { return unpatch.in_dim(); }

  void collect(const std::string& prefix, ParamList<T>& params) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks[i].collect(prefix + ".block" + std::to_string(i), params);
    }
    unpatch.collect(prefix + ".unpatch", params);
    params.push_back({prefix + ".tail.weight", &tail_weight});
    params.push_back({prefix + ".tail.bias", &tail_bias});
  }
};

/// The tail starts at zero, so a fresh decoder returns its input image.
template <typename T>
DecoderParams<T> make_decoder(std::size_t patch_size, std::size_t feat_dim,
                              std::size_t num_blocks, std::size_t ffn_dim, std::uint64_t seed);

template <typename T>
struct DecoderCache {
  Shape features_shape;
  std::vector<BlockCache<T>> blocks;
  Tensor<T> tokens;    // block output, unpatch input
  Tensor<T> residual;  // unpatched image-space residual [H x W x 3]
  Tensor<T> pre_clamp;
};

template <typename T>
Tensor<T> decode(const Tensor<T>& enhanced, const Tensor<T>& img, const DecoderParams<T>& params,
                 DecoderCache<T>* cache = nullptr);

/// Clamp passes gradient where the pre-clamp value lies in [0, 1].
/// Accumulates parameter gradients and returns dL/dX_hat.
template <typename T>
Tensor<T> decode_backward(const DecoderParams<T>& params, const DecoderCache<T>& cache,
                          const Tensor<T>& d_out, DecoderParams<T>& grad);

}  // namespace mvlr
