// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tensor arithmetic with hand-written backward rules. Every function is pure
// and checks operand shapes on entry; a mismatch raises ShapeError naming
// both shapes. Instantiated for float and double.

#pragma once

#include <vector>

#include "mvlr/tensor.hpp"

namespace mvlr {

template <typename T>
struct MatmulGrads {
  Tensor<T> da;
  Tensor<T> db;
};

/// c = a * b for a [m x n], b [n x p].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// a * b^T for a [m x n], b [p x n].
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

/// a^T * b for a [n x m], b [n x p].
template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b);

/// dA = dC * B^T, dB = A^T * dC.
template <typename T>
MatmulGrads<T> matmul_backward(const Tensor<T>& a, const Tensor<T>& b,
                               const Tensor<T>& dc);

template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

// a += b
template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b);

// x [m x n] + bias [n] broadcast over rows.
template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& x, const Tensor<T>& bias);

// Column sums of a [m x n] matrix; the gradient of add_row_bias w.r.t. bias.
template <typename T>
Tensor<T> sum_rows(const Tensor<T>& x);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
// dy masked where the forward input was positive.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy);

/// Row-wise softmax with per-row max subtraction.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x);
/// Given y = softmax_rows(x) and dy, returns dx.
template <typename T>
Tensor<T> softmax_rows_backward(const Tensor<T>& y, const Tensor<T>& dy);

template <typename T>
struct LayerNormCache {
  Tensor<T> normalized;     // (x - mean) * rstd
  std::vector<T> inv_std;   // one per row
};

inline constexpr double kLayerNormEps = 1e-5;

/// Normalizes each row of x [m x n] to zero mean / unit variance, then
/// applies gamma [n] and beta [n].
template <typename T>
Tensor<T> layer_norm_rows(const Tensor<T>& x, const Tensor<T>& gamma,
                          const Tensor<T>& beta, LayerNormCache<T>* cache = nullptr);

/// Accumulates into dgamma/dbeta, returns dx.
template <typename T>
Tensor<T> layer_norm_rows_backward(const LayerNormCache<T>& cache,
                                   const Tensor<T>& gamma, const Tensor<T>& dy,
                                   Tensor<T>& dgamma, Tensor<T>& dbeta);

/// x [H x W x C] -> [C], mean over spatial positions.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);
/// Spreads dq [C] uniformly back over an [H x W x C] grid.
template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& dq, const Shape& input_shape);

template <typename T>
struct Conv3x3Grads {
  Tensor<T> dx;
  Tensor<T> dweight;
  Tensor<T> dbias;
};

/// Same-size 3x3 convolution with zero padding 1.
/// x [H x W x Cin], weight [9*Cin x Cout] with rows ordered (ky, kx, cin),
/// bias [Cout]. Returns [H x W x Cout].
template <typename T>
Tensor<T> conv3x3(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
Conv3x3Grads<T> conv3x3_backward(const Tensor<T>& x, const Tensor<T>& weight,
                                 const Tensor<T>& dy, bool need_dx = true);

template <typename T>
T sum(const Tensor<T>& x);
template <typename T>
T mean(const Tensor<T>& x);
template <typename T>
double squared_norm(const Tensor<T>& x);

template <typename T>
bool all_finite(const Tensor<T>& x);

}  // namespace mvlr
