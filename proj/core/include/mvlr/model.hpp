// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Full restoration network: prior projection -> encoder (+ fusion) ->
// memory-bank enhancement -> decoder.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "mvlr/decoder.hpp"
#include "mvlr/encoder.hpp"
#include "mvlr/imb.hpp"
#include "mvlr/prior.hpp"

namespace mvlr {

struct ModelConfig {
  std::size_t patch_size = 4;
  std::size_t feat_dim = 64;
  std::size_t key_dim = 64;
  std::size_t encoder_blocks = 2;
  std::size_t decoder_blocks = 2;
  std::size_t ffn_dim = 128;
  std::size_t prior_tokens = kDefaultPriorTokens;
  std::size_t prior_dim = kDefaultPriorDim;
  std::size_t prior_hidden = kDefaultPriorHidden;
  std::size_t imb_capacity = kDefaultImbCapacity;
  std::size_t imb_topk = kDefaultImbTopk;
  bool use_prior = true;
  bool use_imb = true;

  void validate() const;

  /// 16x16 inputs, patch 4, C_feat 16, K = 8, k = 2; one block per side.
  static ModelConfig tiny();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Rows of the component ablation: base (neither), vlm (prior fusion only),
/// imb (memory only), full (both).
enum class Ablation { base, vlm, imb, full };

std::string_view to_string(Ablation ablation);
Ablation parse_ablation(std::string_view name);
void apply_ablation(ModelConfig& config, Ablation ablation);
Ablation ablation_of(const ModelConfig& config);

template <typename T>
struct ModelParams {
  ModelConfig config;
  ProjectionParams<T> projection;
  EncoderParams<T> encoder;
  MemoryBank<T> bank;
  DecoderParams<T> decoder;

  /// Every trainable tensor with a stable dotted name, in a fixed order.
  ParamList<T> parameters();

  ModelParams zeros_like() const;
};

/// Each tensor draws from its own named sub-stream of `seed`, so models that
/// differ only in ablation flags or bank size share all other initial weights.
template <typename T>
ModelParams<T> init_model(const ModelConfig& config, std::uint64_t seed);

template <typename U, typename T>
ModelParams<U> cast_model(const ModelParams<T>& model);

template <typename T>
struct ModelCache {
  ProjectionCache<T> projection;
  Shape prior_shape;
  EncoderCache<T> encoder;
  ImbTrace<T> imb;
  DecoderCache<T> decoder;
};

/// Degraded image [H x W x 3] in [0, 1] plus its prior -> restored image.
template <typename T>
Tensor<T> model_forward(const ModelParams<T>& model, const Tensor<T>& img,
                        const PriorEmbedding<T>& prior, ModelCache<T>* cache = nullptr);

/// Accumulates dL/dθ for every parameter into `grad`.
template <typename T>
void model_backward(const ModelParams<T>& model, const ModelCache<T>& cache,
                    const Tensor<T>& d_out, ModelParams<T>& grad);

}  // namespace mvlr
