// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/encoder.hpp"

#include <cmath>

#include "mvlr/random.hpp"

namespace mvlr {

namespace {

void check_patch_grid(const Shape& shape, std::size_t p, const char* op) {
  if (shape.size() != 3) {
    throw ShapeError(std::string(op) + ": expected an H x W x C image, got " + to_string(shape));
  }
  if (p == 0 || shape[0] % p != 0 || shape[1] % p != 0) {
    throw ShapeError(std::string(op) + ": image " + to_string(shape) +
                     " is not divisible by patch size " + std::to_string(p));
  }
}

}  // namespace

template <typename T>
Tensor<T> extract_patches(const Tensor<T>& img, std::size_t p) {
  check_patch_grid(img.shape(), p, "extract_patches");
  const std::size_t gw = img.dim(1) / p;
  const std::size_t c = img.dim(2);
  const std::size_t n = (img.dim(0) / p) * gw;
  Tensor<T> out({n, p * p * c});
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t y0 = (t / gw) * p;
    const std::size_t x0 = (t % gw) * p;
    T* dst = out.raw() + t * p * p * c;
    for (std::size_t py = 0; py < p; ++py) {
      const T* src = &img.at(y0 + py, x0, 0);
      std::copy(src, src + p * c, dst + py * p * c);
    }
  }
  return out;
}

template <typename T>
Tensor<T> assemble_patches(const Tensor<T>& patches, std::size_t height, std::size_t width,
                           std::size_t p, std::size_t channels) {
  check_patch_grid({height, width, channels}, p, "assemble_patches");
  const std::size_t gw = width / p;
  const std::size_t n = (height / p) * gw;
  if (patches.shape() != Shape{n, p * p * channels}) {
    throw ShapeError("assemble_patches: patch matrix " + to_string(patches.shape()) +
                     " does not tile " + to_string({height, width, channels}));
  }
  Tensor<T> img({height, width, channels});
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t y0 = (t / gw) * p;
    const std::size_t x0 = (t % gw) * p;
    const T* src = patches.raw() + t * p * p * channels;
    for (std::size_t py = 0; py < p; ++py) {
      std::copy(src + py * p * channels, src + (py + 1) * p * channels,
                &img.at(y0 + py, x0, 0));
    }
  }
  return img;
}

template <typename T>
Tensor<T> patchify(const Tensor<T>& img, std::size_t p, const Linear<T>& embedding) {
  Tensor<T> patches = extract_patches(img, p);
  if (patches.dim(1) != embedding.in_dim()) {
    throw ShapeError("patchify: patch width " + std::to_string(patches.dim(1)) +
                     " does not match embedding " + to_string(embedding.weight.shape()));
  }
  return linear_forward(embedding, patches);
}

template <typename T>
Tensor<T> positional_encoding(std::size_t grid_h, std::size_t grid_w, std::size_t dim) {
  Tensor<T> pe({grid_h * grid_w, dim});
  const std::size_t half = dim / 2;
  auto fill = [&](T* row, std::size_t count, double pos) {
    const std::size_t pairs = count / 2;
    for (std::size_t i = 0; i < pairs; ++i) {
      const double freq = std::pow(100.0, -static_cast<double>(i) / static_cast<double>(pairs));
      row[2 * i] = static_cast<T>(std::sin(pos * freq));
      row[2 * i + 1] = static_cast<T>(std::cos(pos * freq));
    }
  };
  for (std::size_t y = 0; y < grid_h; ++y) {
    for (std::size_t x = 0; x < grid_w; ++x) {
      T* row = pe.raw() + (y * grid_w + x) * dim;
      fill(row, half, static_cast<double>(y));
      fill(row + half, dim - half, static_cast<double>(x));
    }
  }
  return pe;
}

template <typename T>
FusionParams<T> make_fusion(std::size_t feat_dim, std::size_t key_dim, std::uint64_t seed) {
  if (key_dim == 0) throw ValidationError("fusion key dimension must be at least 1");
  const double s_in = 1.0 / std::sqrt(static_cast<double>(feat_dim));
  const double s_out = 1.0 / std::sqrt(static_cast<double>(key_dim));
  return {normal_tensor<T>({feat_dim, key_dim}, s_in, derive_seed(seed, "query")),
          normal_tensor<T>({feat_dim, key_dim}, s_in, derive_seed(seed, "key")),
          normal_tensor<T>({feat_dim, key_dim}, s_in, derive_seed(seed, "value")),
          normal_tensor<T>({key_dim, feat_dim}, s_out, derive_seed(seed, "output"))};
}

template <typename T>
Tensor<T> cross_attention_fuse(const Tensor<T>& features, const ProjectedPrior<T>& prior,
                               const FusionParams<T>& params, FusionCache<T>* cache) {
  const Tensor<T>& p = prior.matrix;
  if (features.rank() != 2 || p.rank() != 2 || features.dim(1) != p.dim(1) ||
      features.dim(1) != params.feat_dim()) {
    throw ShapeError("cross_attention_fuse: features " + to_string(features.shape()) +
                     ", prior " + to_string(p.shape()) + ", W^Q " +
                     to_string(params.query.shape()));
  }
  FusionCache<T> local;
  FusionCache<T>& c = cache ? *cache : local;
  c.q = matmul(features, params.query);
  c.k = matmul(p, params.key);
  c.v = matmul(p, params.value);
  Tensor<T> scores = matmul_nt(c.q, c.k);
  const T inv_sqrt_dk = T{1} / std::sqrt(static_cast<T>(params.key_dim()));
  for (auto& s : scores.data()) s *= inv_sqrt_dk;
  c.attention = softmax_rows(scores);
  c.context = matmul(c.attention, c.v);
  if (cache) {
    c.features = features;
    c.prior = p;
  }
  return add(features, matmul(c.context, params.output));
}

template <typename T>
FusionGrads<T> cross_attention_fuse_backward(const FusionParams<T>& params,
                                             const FusionCache<T>& c, const Tensor<T>& dx,
                                             FusionParams<T>& grad) {
  const T inv_sqrt_dk = T{1} / std::sqrt(static_cast<T>(params.key_dim()));
  add_inplace(grad.output, matmul_tn(c.context, dx));
  Tensor<T> d_context = matmul_nt(dx, params.output);
  Tensor<T> d_attention = matmul_nt(d_context, c.v);
  Tensor<T> d_v = matmul_tn(c.attention, d_context);
  Tensor<T> d_scores = softmax_rows_backward(c.attention, d_attention);
  for (auto& s : d_scores.data()) s *= inv_sqrt_dk;
  Tensor<T> d_q = matmul(d_scores, c.k);
  Tensor<T> d_k = matmul_tn(d_scores, c.q);

  add_inplace(grad.query, matmul_tn(c.features, d_q));
  add_inplace(grad.key, matmul_tn(c.prior, d_k));
  add_inplace(grad.value, matmul_tn(c.prior, d_v));

  FusionGrads<T> out;
  out.d_features = add(dx, matmul_nt(d_q, params.query));
  out.d_prior = add(matmul_nt(d_k, params.key), matmul_nt(d_v, params.value));
  return out;
}

template <typename T>
EncoderParams<T> make_encoder(std::size_t patch_size, std::size_t feat_dim, std::size_t key_dim,
                              std::size_t num_blocks, std::size_t ffn_dim, std::uint64_t seed) {
  EncoderParams<T> e;
  e.patch_size = patch_size;
  e.patch_embed = make_linear<T>(patch_size * patch_size * 3, feat_dim,
                                 derive_seed(seed, "patch_embed"));
  for (std::size_t i = 0; i < num_blocks; ++i) {
    e.blocks.push_back(make_transformer_block<T>(
        feat_dim, ffn_dim, derive_seed(seed, "block" + std::to_string(i))));
  }
  e.fusion = make_fusion<T>(feat_dim, key_dim, derive_seed(seed, "fusion"));
  return e;
}

template <typename T>
Tensor<T> encode(const Tensor<T>& img, const ProjectedPrior<T>& prior,
                 const EncoderParams<T>& params, bool use_prior, EncoderCache<T>* cache) {
  const std::size_t p = params.patch_size;
  check_patch_grid(img.shape(), p, "encode");
  const std::size_t gh = img.dim(0) / p;
  const std::size_t gw = img.dim(1) / p;
  const std::size_t c = params.feat_dim();

  Tensor<T> patches = extract_patches(img, p);
  Tensor<T> tokens = linear_forward(params.patch_embed, patches);
  add_inplace(tokens, positional_encoding<T>(gh, gw, c));

  if (cache) {
    cache->image_shape = img.shape();
    cache->grid_h = gh;
    cache->grid_w = gw;
    cache->patches = std::move(patches);
    cache->blocks.assign(params.blocks.size(), {});
    cache->fused = use_prior;
  }
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    tokens = block_forward(params.blocks[i], tokens, cache ? &cache->blocks[i] : nullptr);
  }
  if (use_prior) {
    tokens = cross_attention_fuse(tokens, prior, params.fusion, cache ? &cache->fusion : nullptr);
  }
  return std::move(tokens).reshaped({gh, gw, c});
}

template <typename T>
void encode_backward(const EncoderParams<T>& params, const EncoderCache<T>& cache,
                     const Tensor<T>& dx, EncoderParams<T>& grad, Tensor<T>* d_prior) {
  const std::size_t c = params.feat_dim();
  const Shape expected{cache.grid_h, cache.grid_w, c};
  if (dx.shape() != expected) {
    throw ShapeError("encode_backward: upstream " + to_string(dx.shape()) + " vs output " +
                     to_string(expected));
  }
  Tensor<T> d_tokens = dx.reshaped({cache.grid_h * cache.grid_w, c});
  if (cache.fused) {
    FusionGrads<T> g = cross_attention_fuse_backward(params.fusion, cache.fusion, d_tokens,
                                                     grad.fusion);
    d_tokens = std::move(g.d_features);
    if (d_prior) *d_prior = std::move(g.d_prior);
  } else if (d_prior) {
    d_prior->fill(T{0});
  }
  for (std::size_t i = params.blocks.size(); i-- > 0;) {
    d_tokens = block_backward(params.blocks[i], cache.blocks[i], d_tokens, grad.blocks[i]);
  }
  linear_backward(params.patch_embed, cache.patches, d_tokens, grad.patch_embed, false);
}

#define MVLR_INSTANTIATE_ENCODER(T)                                                          \
  template Tensor<T> extract_patches(const Tensor<T>&, std::size_t);                         \
  template Tensor<T> assemble_patches(const Tensor<T>&, std::size_t, std::size_t, std::size_t, \
                                      std::size_t);                                          \
  template Tensor<T> patchify(const Tensor<T>&, std::size_t, const Linear<T>&);              \
  template Tensor<T> positional_encoding(std::size_t, std::size_t, std::size_t);             \
  template FusionParams<T> make_fusion(std::size_t, std::size_t, std::uint64_t);             \
  template Tensor<T> cross_attention_fuse(const Tensor<T>&, const ProjectedPrior<T>&,        \
                                          const FusionParams<T>&, FusionCache<T>*);          \
  template FusionGrads<T> cross_attention_fuse_backward(                                     \
      const FusionParams<T>&, const FusionCache<T>&, const Tensor<T>&, FusionParams<T>&);    \
  template EncoderParams<T> make_encoder(std::size_t, std::size_t, std::size_t, std::size_t, \
                                         std::size_t, std::uint64_t);                        \
  template Tensor<T> encode(const Tensor<T>&, const ProjectedPrior<T>&,                      \
                            const EncoderParams<T>&, bool, EncoderCache<T>*);                \
  template void encode_backward(const EncoderParams<T>&, const EncoderCache<T>&,             \
                                const Tensor<T>&, EncoderParams<T>&, Tensor<T>*);

MVLR_INSTANTIATE_ENCODER(float)
MVLR_INSTANTIATE_ENCODER(double)

#undef MVLR_INSTANTIATE_ENCODER

}  // namespace mvlr
