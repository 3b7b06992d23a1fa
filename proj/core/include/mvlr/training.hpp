// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "mvlr/loss.hpp"
#include "mvlr/metrics.hpp"
#include "mvlr/model.hpp"
#include "mvlr/synth.hpp"

namespace mvlr {

struct TrainConfig {
  std::size_t batch_size = 4;
  std::size_t total_steps = 2000;
  double lr_start = 2e-4;
  double lr_end = 1e-6;
  double lambda_perc = kLambdaPerc;
  double charbonnier_eps = kCharbonnierEps;
  double grad_clip = 1.0;  // global L2 norm; 0 disables clipping
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  ModelConfig model;  // carries the ablation flags and bank size

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Cosine annealing from lr_start (step 0) to lr_end (step total_steps).
double lr_at(std::size_t step, const TrainConfig& config);

template <typename T>
struct TrainingSample {
  Tensor<T> degraded;
  Tensor<T> clean;
  PriorEmbedding<T> prior;
  typename PerceptualProxy<T>::Features clean_features;
};

/// Casts a synthesized pair to T, attaches its synthetic prior and caches the
/// clean image's proxy features.
template <typename T>
TrainingSample<T> make_training_sample(const DatasetSample& sample, const ModelConfig& model,
                                       const PerceptualProxy<T>& proxy);

struct StepStats {
  std::size_t step = 0;
  double loss = 0.0;
  double charbonnier = 0.0;
  double perceptual = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;  // before clipping
};

/// Adam with bias correction. Memory-bank rows whose gradient is exactly
/// zero in a step (slots no sample selected) are skipped entirely, so the
/// prototype path never moves an unselected slot.
template <typename T>
class Adam {
 public:
  Adam(ModelParams<T>& model, const TrainConfig& config);

  void apply(ModelParams<T>& grad, double lr);
  std::size_t steps() const { return t_; }

 private:
  ModelParams<T>* model_;
  ModelParams<T> m_;
  ModelParams<T> v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

/// Owns the optimizer state and gradient buffers for one model.
template <typename T>
class Trainer {
 public:
  Trainer(ModelParams<T>& model, TrainConfig config);

  /// One forward/backward/update over `batch` at lr_at(step).
  StepStats train_step(std::span<const TrainingSample<T>* const> batch, std::size_t step);
  StepStats train_step_with_lr(std::span<const TrainingSample<T>* const> batch, double lr,
                               std::size_t step = 0);

  const TrainConfig& config() const { return config_; }
  const PerceptualProxy<T>& proxy() const { return proxy_; }

 private:
  ModelParams<T>* model_;
  TrainConfig config_;
  PerceptualProxy<T> proxy_;
  Adam<T> adam_;
  ModelParams<T> grad_;
};

using StepCallback = std::function<void(const StepStats&)>;

/// Full run: initializes the model from config.seed, reshuffles the training
/// set every epoch and runs config.total_steps updates.
template <typename T>
ModelParams<T> train_model(const TrainConfig& config, const Dataset& train,
                           std::vector<StepStats>* log = nullptr,
                           const StepCallback& on_step = {});

void write_train_log(const std::filesystem::path& path, const std::vector<StepStats>& log);

/// Restores every sample with a read-only model. Metrics are computed in
/// double precision against the clean image.
template <typename T>
std::vector<EvalRecord> evaluate_model(const ModelParams<T>& model, const Dataset& data);

/// Mean PSNR of the restored images.
double mean_restored_psnr(const std::vector<EvalRecord>& records);
double mean_degraded_psnr(const std::vector<EvalRecord>& records);

/// Prior handed to the model for a synthesized sample.
template <typename T>
PriorEmbedding<T> sample_prior(const DegradationSpec& spec, const ModelConfig& model);

}  // namespace mvlr
