// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Patch-token transformer encoder with prior-conditioned cross-attention:
//   X = F + softmax((F Wq)(P Wk)^T / sqrt(d_k)) (P Wv) Wo

#pragma once

#include <cstdint>
#include <vector>

#include "mvlr/layers.hpp"
#include "mvlr/prior.hpp"

namespace mvlr {

/// img [H x W x C] -> [N x p*p*C], N = (H/p)(W/p). Tokens follow the patch
/// grid in row-major order; each row is the patch flattened as (py, px, c).
template <typename T>
Tensor<T> extract_patches(const Tensor<T>& img, std::size_t patch_size);

/// Inverse of extract_patches.
template <typename T>
Tensor<T> assemble_patches(const Tensor<T>& patches, std::size_t height, std::size_t width,
                           std::size_t patch_size, std::size_t channels = 3);

/// Non-overlapping patches, flattened and linearly embedded.
template <typename T>
Tensor<T> patchify(const Tensor<T>& img, std::size_t patch_size, const Linear<T>& embedding);

/// Fixed 2D sine-cosine position code [grid_h*grid_w x dim]; the first half
/// of the channels encodes the row index, the second half the column.
template <typename T>
Tensor<T> positional_encoding(std::size_t grid_h, std::size_t grid_w, std::size_t dim);

template <typename T>
struct FusionParams {
  Tensor<T> query;   // W^Q [C_feat x d_k]
  Tensor<T> key;     // W^K [C_feat x d_k]
  Tensor<T> value;   // W^V [C_feat x d_k]
  Tensor<T> output;  // [d_k x C_feat]

  std::size_t feat_dim() const { return query.dim(0); }
  std::size_t key_dim() const { return query.dim(1); }

  void collect(const std::string& prefix, ParamList<T>& params) {
    params.push_back({prefix + ".query", &query});
    params.push_back({prefix + ".key", &key});
    params.push_back({prefix + ".value", &value});
    params.push_back({prefix + ".output", &output});
  }
};

template <typename T>
FusionParams<T> make_fusion(std::size_t feat_dim, std::size_t key_dim, std::uint64_t seed);

template <typename T>
struct FusionCache {
  Tensor<T> features;
  Tensor<T> prior;
  Tensor<T> q, k, v;
  Tensor<T> attention;  // [N x L]
  Tensor<T> context;    // [N x d_k]
};

template <typename T>
Tensor<T> cross_attention_fuse(const Tensor<T>& features, const ProjectedPrior<T>& prior,
                               const FusionParams<T>& params, FusionCache<T>* cache = nullptr);

template <typename T>
struct FusionGrads {
  Tensor<T> d_features;
  Tensor<T> d_prior;
};

template <typename T>
FusionGrads<T> cross_attention_fuse_backward(const FusionParams<T>& params,
                                             const FusionCache<T>& cache, const Tensor<T>& dx,
                                             FusionParams<T>& grad);

template <typename T>
struct EncoderParams {
  std::size_t patch_size = 4;
  Linear<T> patch_embed;  // p*p*3 -> C_feat
  std::vector<TransformerBlock<T>> blocks;
  FusionParams<T> fusion;

  std::size_t feat_dim() const { return patch_embed.out_dim(); }

  void collect(const std::string& prefix, ParamList<T>& params) {
    patch_embed.collect(prefix + ".patch_embed", params);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks[i].collect(prefix + ".block" + std::to_string(i), params);
    }
    fusion.collect(prefix + ".fusion", params);
  }
};

template <typename T>
EncoderParams<T> make_encoder(std::size_t patch_size, std::size_t feat_dim, std::size_t key_dim,
                              std::size_t num_blocks, std::size_t ffn_dim, std::uint64_t seed);

template <typename T>
struct EncoderCache {
  Shape image_shape;
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  Tensor<T> patches;
  std::vector<BlockCache<T>> blocks;
  bool fused = false;
  FusionCache<T> fusion;
};

/// img [H x W x 3] -> X [H/p x W/p x C_feat]. With use_prior false the fusion
/// block is skipped and `prior` is never read.
template <typename T>
Tensor<T> encode(const Tensor<T>& img, const ProjectedPrior<T>& prior,
                 const EncoderParams<T>& params, bool use_prior,
                 EncoderCache<T>* cache = nullptr);

/// Accumulates parameter gradients; writes dL/dP to d_prior when non-null
/// (all zeros when the fusion block was skipped).
template <typename T>
void encode_backward(const EncoderParams<T>& params, const EncoderCache<T>& cache,
                     const Tensor<T>& dx, EncoderParams<T>& grad, Tensor<T>* d_prior = nullptr);

}  // namespace mvlr
