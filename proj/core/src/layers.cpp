// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/layers.hpp"

#include <cmath>

#include "mvlr/random.hpp"

namespace mvlr {

template <typename T>
Linear<T> make_linear(std::size_t in, std::size_t out, std::uint64_t seed, double stddev) {
  if (stddev <= 0.0) stddev = 1.0 / std::sqrt(static_cast<double>(in));
  return {normal_tensor<T>({in, out}, stddev, seed), Tensor<T>({out})};
}

template <typename T>
Tensor<T> linear_forward(const Linear<T>& layer, const Tensor<T>& x) {
  return add_row_bias(matmul(x, layer.weight), layer.bias);
}

template <typename T>
Tensor<T> linear_backward(const Linear<T>& layer, const Tensor<T>& x, const Tensor<T>& dy,
                          Linear<T>& grad, bool need_dx) {
  add_inplace(grad.weight, matmul_tn(x, dy));
  add_inplace(grad.bias, sum_rows(dy));
  if (!need_dx) return {};
  return matmul_nt(dy, layer.weight);
}

template <typename T>
LayerNormParams<T> make_layer_norm(std::size_t dim) {
  return {Tensor<T>({dim}, T{1}), Tensor<T>({dim})};
}

template <typename T>
TransformerBlock<T> make_transformer_block(std::size_t dim, std::size_t hidden,
                                           std::uint64_t seed) {
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  TransformerBlock<T> b;
  b.norm1 = make_layer_norm<T>(dim);
  b.query = normal_tensor<T>({dim, dim}, s, derive_seed(seed, "query"));
  b.key = normal_tensor<T>({dim, dim}, s, derive_seed(seed, "key"));
  b.value = normal_tensor<T>({dim, dim}, s, derive_seed(seed, "value"));
  b.output = normal_tensor<T>({dim, dim}, s, derive_seed(seed, "output"));
  b.norm2 = make_layer_norm<T>(dim);
  b.ff_in = make_linear<T>(dim, hidden, derive_seed(seed, "ff_in"));
  b.ff_out = make_linear<T>(hidden, dim, derive_seed(seed, "ff_out"));
  return b;
}

template <typename T>
Tensor<T> block_forward(const TransformerBlock<T>& block, const Tensor<T>& x,
                        BlockCache<T>* cache) {
  if (x.rank() != 2 || x.dim(1) != block.dim()) {
    throw ShapeError("transformer block: tokens " + to_string(x.shape()) +
                     " do not match block width " + std::to_string(block.dim()));
  }
  BlockCache<T> local;
  BlockCache<T>& c = cache ? *cache : local;
  const T inv_sqrt_d = T{1} / std::sqrt(static_cast<T>(block.dim()));

  c.input = x;
  c.normed1 = layer_norm_rows(x, block.norm1.gamma, block.norm1.beta, &c.ln1);
  c.q = matmul(c.normed1, block.query);
  c.k = matmul(c.normed1, block.key);
  c.v = matmul(c.normed1, block.value);
  Tensor<T> scores = matmul_nt(c.q, c.k);
  for (auto& s : scores.data()) s *= inv_sqrt_d;
  c.attention = softmax_rows(scores);
  c.context = matmul(c.attention, c.v);
  c.mid = add(x, matmul(c.context, block.output));

  c.normed2 = layer_norm_rows(c.mid, block.norm2.gamma, block.norm2.beta, &c.ln2);
  c.hidden_pre = linear_forward(block.ff_in, c.normed2);
  c.hidden = relu(c.hidden_pre);
  return add(c.mid, linear_forward(block.ff_out, c.hidden));
}

template <typename T>
Tensor<T> block_backward(const TransformerBlock<T>& block, const BlockCache<T>& c,
                         const Tensor<T>& dy, TransformerBlock<T>& grad) {
  const T inv_sqrt_d = T{1} / std::sqrt(static_cast<T>(block.dim()));

  // Feed-forward branch.
  Tensor<T> d_hidden = linear_backward(block.ff_out, c.hidden, dy, grad.ff_out);
  Tensor<T> d_hidden_pre = relu_backward(c.hidden_pre, d_hidden);
  Tensor<T> d_normed2 = linear_backward(block.ff_in, c.normed2, d_hidden_pre, grad.ff_in);
  Tensor<T> d_mid = layer_norm_rows_backward(c.ln2, block.norm2.gamma, d_normed2,
                                             grad.norm2.gamma, grad.norm2.beta);
  add_inplace(d_mid, dy);

  // Attention branch.
  add_inplace(grad.output, matmul_tn(c.context, d_mid));
  Tensor<T> d_context = matmul_nt(d_mid, block.output);
  Tensor<T> d_attention = matmul_nt(d_context, c.v);
  Tensor<T> d_v = matmul_tn(c.attention, d_context);
  Tensor<T> d_scores = softmax_rows_backward(c.attention, d_attention);
  for (auto& s : d_scores.data()) s *= inv_sqrt_d;
  Tensor<T> d_q = matmul(d_scores, c.k);
  Tensor<T> d_k = matmul_tn(d_scores, c.q);

  add_inplace(grad.query, matmul_tn(c.normed1, d_q));
  add_inplace(grad.key, matmul_tn(c.normed1, d_k));
  add_inplace(grad.value, matmul_tn(c.normed1, d_v));
  Tensor<T> d_normed1 = matmul_nt(d_q, block.query);
  add_inplace(d_normed1, matmul_nt(d_k, block.key));
  add_inplace(d_normed1, matmul_nt(d_v, block.value));

  Tensor<T> dx = layer_norm_rows_backward(c.ln1, block.norm1.gamma, d_normed1,
                                          grad.norm1.gamma, grad.norm1.beta);
  add_inplace(dx, d_mid);
  return dx;
}

#define MVLR_INSTANTIATE_LAYERS(T)                                                       \
  template Linear<T> make_linear(std::size_t, std::size_t, std::uint64_t, double);       \
  template Tensor<T> linear_forward(const Linear<T>&, const Tensor<T>&);                 \
  template Tensor<T> linear_backward(const Linear<T>&, const Tensor<T>&, const Tensor<T>&, \
                                     Linear<T>&, bool);                                  \
  template LayerNormParams<T> make_layer_norm(std::size_t);                              \
  template TransformerBlock<T> make_transformer_block(std::size_t, std::size_t,          \
                                                      std::uint64_t);                    \
  template Tensor<T> block_forward(const TransformerBlock<T>&, const Tensor<T>&,         \
                                   BlockCache<T>*);                                      \
  template Tensor<T> block_backward(const TransformerBlock<T>&, const BlockCache<T>&,    \
                                    const Tensor<T>&, TransformerBlock<T>&);

MVLR_INSTANTIATE_LAYERS(float)
MVLR_INSTANTIATE_LAYERS(double)

#undef MVLR_INSTANTIATE_LAYERS

}  // namespace mvlr
