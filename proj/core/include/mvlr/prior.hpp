// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Degradation prior: a token matrix describing weather type, severity and
// scene content, projected to the encoder width by a two-layer MLP.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "mvlr/degradation.hpp"
#include "mvlr/layers.hpp"
#include "mvlr/tensor.hpp"

namespace mvlr {

inline constexpr std::size_t kDefaultPriorTokens = 8;
inline constexpr std::size_t kDefaultPriorDim = 32;
inline constexpr std::size_t kDefaultPriorHidden = 64;

// Row 0 layout of a synthetic prior.
inline constexpr std::size_t kPriorWeatherOffset = 0;  // one-hot rain/snow/haze/mixed
inline constexpr std::size_t kPriorSeverityIndex = 4;
inline constexpr std::size_t kPriorMinDim = 5;

template <typename T>
struct PriorEmbedding {
  Tensor<T> matrix;  // [L x C_l]
  std::optional<DegradationSpec> meta;

  std::size_t tokens() const { return matrix.dim(0); }
  std::size_t dim() const { return matrix.dim(1); }
};

/// Deterministic stand-in for a vision-language embedding. Row 0 holds the
/// weather one-hot in columns 0-3 and severity in column 4; every other
/// entry is uniform in [-1, 1] drawn from `seed` alone.
template <typename T>
PriorEmbedding<T> synth_prior(const DegradationSpec& spec, std::uint64_t seed,
                              std::size_t tokens = kDefaultPriorTokens,
                              std::size_t dim = kDefaultPriorDim);

/// Reads a rank-2 MVLT file. FormatError on bad magic, version, rank or size.
template <typename T>
PriorEmbedding<T> load_prior(const std::filesystem::path& path);

template <typename T>
void save_prior(const std::filesystem::path& path, const PriorEmbedding<T>& prior);

template <typename T>
struct ProjectionParams {
  Linear<T> hidden;  // C_l -> hidden
  Linear<T> out;     // hidden -> C_feat

  std::size_t input_dim() const { return hidden.in_dim(); }
  std::size_t output_dim() const { return out.out_dim(); }

  void collect(const std::string& prefix, ParamList<T>& params) {
    hidden.collect(prefix + ".hidden", params);
    out.collect(prefix + ".out", params);
  }
};

template <typename T>
ProjectionParams<T> make_projection(std::size_t prior_dim, std::size_t hidden,
                                    std::size_t feat_dim, std::uint64_t seed);

template <typename T>
struct ProjectedPrior {
  Tensor<T> matrix;  // [L x C_feat]
};

template <typename T>
struct ProjectionCache {
  Tensor<T> input;
  Tensor<T> hidden_pre;
  Tensor<T> hidden;
};

/// Row-wise MLP: ReLU(E W1 + b1) W2 + b2.
template <typename T>
ProjectedPrior<T> project_prior(const PriorEmbedding<T>& prior, const ProjectionParams<T>& params,
                                ProjectionCache<T>* cache = nullptr);

/// Accumulates parameter gradients for an upstream gradient dP [L x C_feat].
template <typename T>
void project_prior_backward(const ProjectionParams<T>& params, const ProjectionCache<T>& cache,
                            const Tensor<T>& d_projected, ProjectionParams<T>& grad);

}  // namespace mvlr
