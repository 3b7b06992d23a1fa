// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/decoder.hpp"

#include <algorithm>

#include "mvlr/encoder.hpp"
#include "mvlr/random.hpp"

namespace mvlr {

template <typename T>
DecoderParams<T> make_decoder(std::size_t patch_size, std::size_t feat_dim,
                              std::size_t num_blocks, std::size_t ffn_dim, std::uint64_t seed) {
  DecoderParams<T> d;
  d.patch_size = patch_size;
  for (std::size_t i = 0; i < num_blocks; ++i) {
    d.blocks.push_back(make_transformer_block<T>(
        feat_dim, ffn_dim, derive_seed(seed, "block" + std::to_string(i))));
  }
  d.unpatch = make_linear<T>(feat_dim, patch_size * patch_size * 3, derive_seed(seed, "unpatch"));
  d.tail_weight = Tensor<T>({27, 3});
  d.tail_bias = Tensor<T>({3});
  return d;
}

template <typename T>
Tensor<T> decode(const Tensor<T>& enhanced, const Tensor<T>& img, const DecoderParams<T>& params,
                 DecoderCache<T>* cache) {
  const std::size_t p = params.patch_size;
  if (enhanced.rank() != 3 || img.rank() != 3 || img.dim(2) != 3 ||
      enhanced.dim(2) != params.feat_dim() || img.dim(0) != enhanced.dim(0) * p ||
      img.dim(1) != enhanced.dim(1) * p) {
    throw ShapeError("decode: features " + to_string(enhanced.shape()) + " and image " +
                     to_string(img.shape()) + " disagree for patch size " + std::to_string(p));
  }
  Tensor<T> tokens = enhanced.reshaped({enhanced.dim(0) * enhanced.dim(1), enhanced.dim(2)});
  if (cache) {
    cache->features_shape = enhanced.shape();
    cache->blocks.assign(params.blocks.size(), {});
  }
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    tokens = block_forward(params.blocks[i], tokens, cache ? &cache->blocks[i] : nullptr);
  }
  Tensor<T> residual =
      assemble_patches(linear_forward(params.unpatch, tokens), img.dim(0), img.dim(1), p, 3);
  Tensor<T> pre = add(img, conv3x3(residual, params.tail_weight, params.tail_bias));
  Tensor<T> out = pre;
  for (auto& v : out.data()) v = std::clamp(v, T{0}, T{1});
  if (cache) {
    cache->tokens = std::move(tokens);
    cache->residual = std::move(residual);
    cache->pre_clamp = std::move(pre);
  }
  return out;
}

template <typename T>
Tensor<T> decode_backward(const DecoderParams<T>& params, const DecoderCache<T>& cache,
                          const Tensor<T>& d_out, DecoderParams<T>& grad) {
  if (d_out.shape() != cache.pre_clamp.shape()) {
    throw ShapeError("decode_backward: upstream " + to_string(d_out.shape()) + " vs output " +
                     to_string(cache.pre_clamp.shape()));
  }
  Tensor<T> d_pre = d_out;
  for (std::size_t i = 0; i < d_pre.size(); ++i) {
    const T v = cache.pre_clamp[i];
    if (v < T{0} || v > T{1}) d_pre[i] = T{0};
  }
  Conv3x3Grads<T> tail = conv3x3_backward(cache.residual, params.tail_weight, d_pre);
  add_inplace(grad.tail_weight, tail.dweight);
  add_inplace(grad.tail_bias, tail.dbias);

  const Tensor<T> d_patches = extract_patches(tail.dx, params.patch_size);
  Tensor<T> d_tokens = linear_backward(params.unpatch, cache.tokens, d_patches, grad.unpatch);
  for (std::size_t i = params.blocks.size(); i-- > 0;) {
    d_tokens = block_backward(params.blocks[i], cache.blocks[i], d_tokens, grad.blocks[i]);
  }
  return std::move(d_tokens).reshaped(cache.features_shape);
}

#define MVLR_INSTANTIATE_DECODER(T)                                                        \
  template DecoderParams<T> make_decoder(std::size_t, std::size_t, std::size_t, std::size_t, \
                                         std::uint64_t);                                   \
  template Tensor<T> decode(const Tensor<T>&, const Tensor<T>&, const DecoderParams<T>&,    \
                            DecoderCache<T>*);                                             \
  template Tensor<T> decode_backward(const DecoderParams<T>&, const DecoderCache<T>&,       \
                                     const Tensor<T>&, DecoderParams<T>&);

MVLR_INSTANTIATE_DECODER(float)
MVLR_INSTANTIATE_DECODER(double)

#undef MVLR_INSTANTIATE_DECODER

}  // namespace mvlr
