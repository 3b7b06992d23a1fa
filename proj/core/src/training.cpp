// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

#include "mvlr/ops.hpp"
#include "mvlr/random.hpp"

namespace mvlr {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (total_steps == 0) throw ValidationError("total_steps must be positive");
  if (!(lr_end > 0.0) || !(lr_start > lr_end)) {
    throw ValidationError("learning rates must satisfy lr_start > lr_end > 0");
  }
  if (!(lambda_perc >= 0.0)) throw ValidationError("lambda_perc must be non-negative");
  if (!(charbonnier_eps > 0.0)) throw ValidationError("charbonnier_eps must be positive");
  if (!(grad_clip >= 0.0)) throw ValidationError("grad_clip must be non-negative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ValidationError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ValidationError("adam_eps must be positive");
  model.validate();
}

double lr_at(std::size_t step, const TrainConfig& config) {
  if (step > config.total_steps) {
    throw ValidationError("step " + std::to_string(step) + " outside [0, " +
                          std::to_string(config.total_steps) + "]");
  }
  if (step == 0) return config.lr_start;
  if (step == config.total_steps) return config.lr_end;
  const double phase = std::numbers::pi * static_cast<double>(step) /
                       static_cast<double>(config.total_steps);
  return config.lr_end + 0.5 * (config.lr_start - config.lr_end) * (1.0 + std::cos(phase));
}

template <typename T>
PriorEmbedding<T> sample_prior(const DegradationSpec& spec, const ModelConfig& model) {
  return synth_prior<T>(spec, 0, model.prior_tokens, model.prior_dim);
}

template <typename T>
TrainingSample<T> make_training_sample(const DatasetSample& sample, const ModelConfig& model,
                                       const PerceptualProxy<T>& proxy) {
  TrainingSample<T> out;
  out.degraded = sample.degraded.cast<T>();
  out.clean = sample.clean.cast<T>();
  out.prior = sample_prior<T>(sample.spec, model);
  out.clean_features = proxy.features(out.clean);
  return out;
}

// ---------------------------------------------------------------------------

template <typename T>
Adam<T>::Adam(ModelParams<T>& model, const TrainConfig& config)
    : model_(&model),
      m_(model.zeros_like()),
      v_(model.zeros_like()),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.adam_eps) {}

template <typename T>
void Adam<T>::apply(ModelParams<T>& grad, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto params = model_->parameters();
  auto grads = grad.parameters();
  auto ms = m_.parameters();
  auto vs = v_.parameters();

  auto update = [&](std::size_t t, std::size_t begin, std::size_t end) {
    T* p = params[t].tensor->raw();
    const T* g = grads[t].tensor->raw();
    T* m = ms[t].tensor->raw();
    T* v = vs[t].tensor->raw();
    for (std::size_t i = begin; i < end; ++i) {
      const double gi = g[i];
      const double mi = beta1_ * m[i] + (1.0 - beta1_) * gi;
      const double vi = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      p[i] = static_cast<T>(p[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + eps_));
    }
  };

  const Tensor<T>* slots = &model_->bank.slots;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].tensor != slots) {
      update(t, 0, params[t].tensor->size());
      continue;
    }
    if (model_->bank.frozen) continue;
    const std::size_t width = slots->dim(1);
    const T* g = grads[t].tensor->raw();
    for (std::size_t row = 0; row < slots->dim(0); ++row) {
      const T* gr = g + row * width;
      if (std::all_of(gr, gr + width, [](T x) { return x == T{0}; })) continue;
      update(t, row * width, (row + 1) * width);
    }
  }
}

// ---------------------------------------------------------------------------

template <typename T>
Trainer<T>::Trainer(ModelParams<T>& model, TrainConfig config)
    : model_(&model),
      config_(std::move(config)),
      adam_(model, config_),
      grad_(model.zeros_like()) {
  config_.validate();
}

template <typename T>
StepStats Trainer<T>::train_step(std::span<const TrainingSample<T>* const> batch,
                                 std::size_t step) {
  return train_step_with_lr(batch, lr_at(step, config_), step);
}

template <typename T>
StepStats Trainer<T>::train_step_with_lr(std::span<const TrainingSample<T>* const> batch,
                                         double lr, std::size_t step) {
  if (batch.empty()) throw ValidationError("train_step: empty batch");
  if (model_->config.use_imb && model_->bank.frozen) {
    throw ValidationError("train_step: memory bank is frozen");
  }
  for (auto& p : grad_.parameters()) p.tensor->fill(T{0});

  StepStats stats;
  stats.step = step;
  stats.lr = lr;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  ModelCache<T> cache;
  Tensor<T> d_out;
  for (const TrainingSample<T>* sample : batch) {
    const Tensor<T> restored = model_forward(*model_, sample->degraded, sample->prior, &cache);
    const LossTerms terms = total_loss(restored, sample->clean, config_.lambda_perc,
                                       config_.charbonnier_eps, proxy_, &sample->clean_features,
                                       &d_out);
    stats.loss += terms.total * inv_batch;
    stats.charbonnier += terms.charbonnier * inv_batch;
    stats.perceptual += terms.perceptual * inv_batch;
    for (auto& v : d_out.values()) v = static_cast<T>(v * inv_batch);
    model_backward(*model_, cache, d_out, grad_);
  }

  double sq = 0.0;
  for (auto& p : grad_.parameters()) sq += squared_norm(*p.tensor);
  stats.grad_norm = std::sqrt(sq);
  if (!std::isfinite(stats.loss) || !std::isfinite(stats.grad_norm)) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "non-finite training state at step %zu: loss=%g grad_norm=%g",
                  step, stats.loss, stats.grad_norm);
    throw TrainingError(buf);
  }
  if (config_.grad_clip > 0.0 && stats.grad_norm > config_.grad_clip) {
    const T factor = static_cast<T>(config_.grad_clip / stats.grad_norm);
    for (auto& p : grad_.parameters()) {
      for (auto& v : p.tensor->values()) v *= factor;
    }
  }
  adam_.apply(grad_, lr);
  return stats;
}

// ---------------------------------------------------------------------------

template <typename T>
ModelParams<T> train_model(const TrainConfig& config, const Dataset& train,
                           std::vector<StepStats>* log, const StepCallback& on_step) {
  config.validate();
  if (train.samples.empty()) throw ValidationError("train_model: empty training set");
  ModelParams<T> model = init_model<T>(config.model, derive_seed(config.seed, "model"));
  Trainer<T> trainer(model, config);

  std::vector<TrainingSample<T>> samples;
  samples.reserve(train.samples.size());
  for (const auto& s : train.samples) {
    samples.push_back(make_training_sample<T>(s, config.model, trainer.proxy()));
  }

  std::vector<std::size_t> order(samples.size());
  std::size_t cursor = order.size();
  std::size_t epoch = 0;
  std::vector<const TrainingSample<T>*> batch;
  for (std::size_t step = 0; step < config.total_steps; ++step) {
    batch.clear();
    while (batch.size() < config.batch_size) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(derive_seed(config.seed, "shuffle"), epoch++));
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(&samples[order[cursor++]]);
    }
    const StepStats stats = trainer.train_step(batch, step);
    if (log) log->push_back(stats);
    if (on_step) on_step(stats);
  }
  return model;
}

void write_train_log(const std::filesystem::path& path, const std::vector<StepStats>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << "step,loss,char,perc,lr\n";
  char buf[160];
  for (const auto& s : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g\n", s.step, s.loss, s.charbonnier,
                  s.perceptual, s.lr);
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path.string());
}

template <typename T>
std::vector<EvalRecord> evaluate_model(const ModelParams<T>& model, const Dataset& data) {
  const ModelParams<double> exact = cast_model<double>(model);
  std::vector<EvalRecord> records;
  records.reserve(data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& s = data.samples[i];
    const Tensor<double> restored =
        model_forward(exact, s.degraded, sample_prior<double>(s.spec, exact.config));
    EvalRecord r;
    r.index = i < data.manifest.size() ? data.manifest[i].index : i;
    r.weather = s.spec.weather;
    r.severity = s.spec.severity;
    r.psnr_degraded = psnr(s.degraded, s.clean);
    r.psnr_restored = psnr(restored, s.clean);
    r.ssim_degraded = ssim(s.degraded, s.clean);
    r.ssim_restored = ssim(restored, s.clean);
    records.push_back(r);
  }
  return records;
}

namespace {

double mean_of(const std::vector<EvalRecord>& records, double EvalRecord::*field) {
  if (records.empty()) throw ValidationError("no evaluation records");
  double acc = 0.0;
  for (const auto& r : records) acc += r.*field;
  return acc / static_cast<double>(records.size());
}

}  // namespace

double mean_restored_psnr(const std::vector<EvalRecord>& records) {
  return mean_of(records, &EvalRecord::psnr_restored);
}

double mean_degraded_psnr(const std::vector<EvalRecord>& records) {
  return mean_of(records, &EvalRecord::psnr_degraded);
}

#define MVLR_INSTANTIATE_TRAINING(T)                                                            \
  template PriorEmbedding<T> sample_prior(const DegradationSpec&, const ModelConfig&);          \
  template TrainingSample<T> make_training_sample(const DatasetSample&, const ModelConfig&,     \
                                                  const PerceptualProxy<T>&);                   \
  template class Adam<T>;                                                                       \
  template class Trainer<T>;                                                                    \
  template ModelParams<T> train_model(const TrainConfig&, const Dataset&,                       \
                                      std::vector<StepStats>*, const StepCallback&);            \
  template std::vector<EvalRecord> evaluate_model(const ModelParams<T>&, const Dataset&);

MVLR_INSTANTIATE_TRAINING(float)
MVLR_INSTANTIATE_TRAINING(double)

}  // namespace mvlr
