// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reconstruction losses. `pred` is the restored image, `target` the clean
// one; every backward returns dLoss/dpred.

#pragma once

#include <cstdint>
#include <vector>

#include "mvlr/tensor.hpp"

namespace mvlr {

inline constexpr double kCharbonnierEps = 1e-3;
inline constexpr double kLambdaPerc = 0.05;
inline constexpr std::uint64_t kPerceptualSeed = 0x5eed'cafe;
inline constexpr std::size_t kPerceptualWidth = 8;

/// mean_i sqrt((pred_i - target_i)^2 + eps^2)
template <typename T>
double charbonnier(const Tensor<T>& pred, const Tensor<T>& target, double eps = kCharbonnierEps);

template <typename T>
Tensor<T> charbonnier_backward(const Tensor<T>& pred, const Tensor<T>& target,
                               double eps = kCharbonnierEps);

/// Frozen two-layer feature extractor: ReLU(conv3x3) twice, 3 -> 8 -> 8
/// channels, He-initialized from a fixed seed. It is never trained.
template <typename T>
class PerceptualProxy {
 public:
  struct Layer {
    Tensor<T> weight;  // [9*Cin x Cout]
    Tensor<T> bias;    // [Cout]
  };

  struct Features {
    std::vector<Tensor<T>> maps;  // post-ReLU output of each layer
  };

  explicit PerceptualProxy(std::uint64_t seed = kPerceptualSeed,
                           std::size_t width = kPerceptualWidth);

  const std::vector<Layer>& layers() const { return layers_; }

  Features features(const Tensor<T>& img) const;

  /// sum_l mean((phi_l(pred) - phi_l(target))^2)
  double loss(const Tensor<T>& pred, const Tensor<T>& target) const;
  double loss(const Features& pred, const Features& target) const;

  /// Gradient w.r.t. pred; `pred_features` must come from features(pred).
  Tensor<T> backward(const Tensor<T>& pred, const Features& pred_features,
                     const Features& target_features) const;

 private:
  std::vector<Layer> layers_;
};

struct LossTerms {
  double total = 0.0;
  double charbonnier = 0.0;
  double perceptual = 0.0;
};

/// charbonnier + lambda * perceptual. Pass cached clean-image features to
/// skip recomputing them; pass d_pred to receive the gradient.
template <typename T>
LossTerms total_loss(const Tensor<T>& pred, const Tensor<T>& target, double lambda_perc,
                     double eps, const PerceptualProxy<T>& proxy,
                     const typename PerceptualProxy<T>::Features* target_features = nullptr,
                     Tensor<T>* d_pred = nullptr);

}  // namespace mvlr
