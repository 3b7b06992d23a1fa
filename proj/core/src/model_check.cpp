// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/model_check.hpp"

#include <algorithm>
#include <chrono>
#include <functional>

#include "mvlr/loss.hpp"
#include "mvlr/ops.hpp"
#include "mvlr/random.hpp"

namespace mvlr {

namespace {

double selection_gap(const ModelParams<double>& model, const Tensor<double>& img,
                     const PriorEmbedding<double>& prior) {
  const ModelConfig& cfg = model.config;
  if (!cfg.use_imb || cfg.imb_topk >= cfg.imb_capacity) return 1.0;
  ModelCache<double> cache;
  model_forward(model, img, prior, &cache);
  std::vector<double> s(cache.imb.similarities.values());
  std::sort(s.begin(), s.end(), std::greater<>());
  return s[cfg.imb_topk - 1] - s[cfg.imb_topk];
}

}  // namespace

ModelGradCheck model_grad_check(std::uint64_t seed, double h, ModelConfig config,
                                std::size_t image_size) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  constexpr int kMaxAttempts = 64;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t point = derive_seed(derive_seed(seed, "gradcheck"),
                                            static_cast<std::uint64_t>(attempt));
    ModelParams<double> model = init_model<double>(config, derive_seed(point, "model"));
    model.decoder.tail_weight =
        normal_tensor<double>(model.decoder.tail_weight.shape(), 0.1, derive_seed(point, "tail.w"));
    model.decoder.tail_bias =
        normal_tensor<double>(model.decoder.tail_bias.shape(), 0.01, derive_seed(point, "tail.b"));
    const Shape image_shape{image_size, image_size, 3};
    // Keep pixels away from the clamp so the loss is smooth at the point.
    const Tensor<double> img = uniform_tensor<double>(image_shape, 0.3, 0.7, derive_seed(point, "img"));
    const Tensor<double> clean =
        uniform_tensor<double>(image_shape, 0.3, 0.7, derive_seed(point, "clean"));
    const DegradationSpec spec{Weather::mixed, 0.5, point};
    const PriorEmbedding<double> prior =
        synth_prior<double>(spec, point, config.prior_tokens, config.prior_dim);

    const double gap = selection_gap(model, img, prior);
    if (gap <= kMinSelectionGap) continue;

    const PerceptualProxy<double> proxy;
    auto loss = [&] {
      return total_loss(model_forward(model, img, prior), clean, kLambdaPerc, kCharbonnierEps, proxy)
          .total;
    };

    ModelCache<double> cache;
    const Tensor<double> out = model_forward(model, img, prior, &cache);
    Tensor<double> d_out;
    total_loss(out, clean, kLambdaPerc, kCharbonnierEps, proxy, nullptr, &d_out);
    ModelParams<double> grad = model.zeros_like();
    model_backward(model, cache, d_out, grad);

    const ParamList<double> params = model.parameters();
    std::vector<Tensor<double>> analytic;
    for (const auto& g : grad.parameters()) analytic.push_back(*g.tensor);

    ModelGradCheck result;
    result.report = grad_check_params(loss, params, analytic, h);
    result.selection_gap = gap;
    result.point_seed = point;
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  }
  throw EvaluationError("no point with a top-k selection gap above 1e-3 found");
}

}  // namespace mvlr
