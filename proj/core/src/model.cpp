// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/model.hpp"

#include "mvlr/random.hpp"

namespace mvlr {

namespace {

void require_positive(std::size_t v, const char* name) {
  if (v == 0) throw ValidationError(std::string("model.") + name + " must be positive");
}

}  // namespace

void ModelConfig::validate() const {
  require_positive(patch_size, "patch_size");
  require_positive(feat_dim, "feat_dim");
  require_positive(key_dim, "key_dim");
  require_positive(ffn_dim, "ffn_dim");
  require_positive(prior_tokens, "prior_tokens");
  require_positive(prior_hidden, "prior_hidden");
  if (prior_dim < kPriorMinDim) {
    throw ValidationError("model.prior_dim must be at least " + std::to_string(kPriorMinDim));
  }
  require_positive(imb_capacity, "imb.capacity");
  if (imb_topk < 1 || imb_topk > imb_capacity) {
    throw ValidationError("imb.topk " + std::to_string(imb_topk) + " must lie in [1, imb.capacity=" +
                          std::to_string(imb_capacity) + "]");
  }
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.patch_size = 4;
  c.feat_dim = 16;
  c.key_dim = 16;
  c.encoder_blocks = 1;
  c.decoder_blocks = 1;
  c.ffn_dim = 32;
  c.prior_tokens = 4;
  c.prior_dim = 8;
  c.prior_hidden = 16;
  c.imb_capacity = 8;
  c.imb_topk = 2;
  return c;
}

std::string_view to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::base: return "base";
    case Ablation::vlm: return "vlm";
    case Ablation::imb: return "imb";
    case Ablation::full: return "full";
  }
  return "unknown";
}

Ablation parse_ablation(std::string_view name) {
  for (Ablation a : {Ablation::base, Ablation::vlm, Ablation::imb, Ablation::full}) {
    if (to_string(a) == name) return a;
  }
  throw ValidationError("unknown ablation '" + std::string(name) +
                        "' (expected base, vlm, imb or full)");
}

void apply_ablation(ModelConfig& config, Ablation ablation) {
  config.use_prior = ablation == Ablation::vlm || ablation == Ablation::full;
  config.use_imb = ablation == Ablation::imb || ablation == Ablation::full;
}

Ablation ablation_of(const ModelConfig& config) {
  if (config.use_prior) return config.use_imb ? Ablation::full : Ablation::vlm;
  return config.use_imb ? Ablation::imb : Ablation::base;
}

template <typename T>
ParamList<T> ModelParams<T>::parameters() {
  ParamList<T> out;
  projection.collect("projection", out);
  encoder.collect("encoder", out);
  bank.collect("imb", out);
  decoder.collect("decoder", out);
  return out;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros_like() const {
  ModelParams<T> z = *this;
  for (auto& p : z.parameters()) p.tensor->fill(T{0});
  return z;
}

template <typename T>
ModelParams<T> init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams<T> m;
  m.config = config;
  m.projection = make_projection<T>(config.prior_dim, config.prior_hidden, config.feat_dim,
                                    derive_seed(seed, "projection"));
  m.encoder = make_encoder<T>(config.patch_size, config.feat_dim, config.key_dim,
                              config.encoder_blocks, config.ffn_dim, derive_seed(seed, "encoder"));
  m.bank = make_memory_bank<T>(config.imb_capacity, config.feat_dim, config.imb_topk,
                               derive_seed(seed, "imb"));
  m.decoder = make_decoder<T>(config.patch_size, config.feat_dim, config.decoder_blocks,
                              config.ffn_dim, derive_seed(seed, "decoder"));
  return m;
}

template <typename U, typename T>
ModelParams<U> cast_model(const ModelParams<T>& model) {
  ModelParams<T> src = model;
  ModelParams<U> dst = init_model<U>(model.config, 0);
  dst.bank.frozen = model.bank.frozen;
  ParamList<T> from = src.parameters();
  ParamList<U> to = dst.parameters();
  for (std::size_t i = 0; i < from.size(); ++i) {
    *to[i].tensor = from[i].tensor->template cast<U>();
  }
  return dst;
}

template <typename T>
Tensor<T> model_forward(const ModelParams<T>& model, const Tensor<T>& img,
                        const PriorEmbedding<T>& prior, ModelCache<T>* cache) {
  const ModelConfig& cfg = model.config;
  ProjectedPrior<T> projected;
  if (cfg.use_prior) {
    projected = project_prior(prior, model.projection, cache ? &cache->projection : nullptr);
    if (cache) cache->prior_shape = projected.matrix.shape();
  }
  Tensor<T> x = encode(img, projected, model.encoder, cfg.use_prior,
                       cache ? &cache->encoder : nullptr);
  Tensor<T> enhanced = imb_forward(x, model.bank, cfg.use_imb, cache ? &cache->imb : nullptr);
  return decode(enhanced, img, model.decoder, cache ? &cache->decoder : nullptr);
}

template <typename T>
void model_backward(const ModelParams<T>& model, const ModelCache<T>& cache,
                    const Tensor<T>& d_out, ModelParams<T>& grad) {
  Tensor<T> d_enhanced = decode_backward(model.decoder, cache.decoder, d_out, grad.decoder);
  Tensor<T> d_x = imb_backward(cache.imb, d_enhanced, grad.bank.slots);
  if (model.config.use_prior) {
    Tensor<T> d_prior(cache.prior_shape);
    encode_backward(model.encoder, cache.encoder, d_x, grad.encoder, &d_prior);
    project_prior_backward(model.projection, cache.projection, d_prior, grad.projection);
  } else {
    encode_backward<T>(model.encoder, cache.encoder, d_x, grad.encoder, nullptr);
  }
}

#define MVLR_INSTANTIATE_MODEL(T)                                                         \
  template struct ModelParams<T>;                                                         \
  template ModelParams<T> init_model(const ModelConfig&, std::uint64_t);                  \
  template Tensor<T> model_forward(const ModelParams<T>&, const Tensor<T>&,                \
                                   const PriorEmbedding<T>&, ModelCache<T>*);             \
  template void model_backward(const ModelParams<T>&, const ModelCache<T>&, const Tensor<T>&, \
                               ModelParams<T>&);

MVLR_INSTANTIATE_MODEL(float)
MVLR_INSTANTIATE_MODEL(double)

template ModelParams<float> cast_model(const ModelParams<double>&);
template ModelParams<double> cast_model(const ModelParams<float>&);
template ModelParams<float> cast_model(const ModelParams<float>&);
template ModelParams<double> cast_model(const ModelParams<double>&);

#undef MVLR_INSTANTIATE_MODEL

}  // namespace mvlr
