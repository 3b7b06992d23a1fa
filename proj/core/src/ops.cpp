// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <sstream>

namespace mvlr {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMatrix<T>>;

template <typename T>
ConstMap<T> view(const Tensor<T>& t) {
  return ConstMap<T>(t.raw(), static_cast<Eigen::Index>(t.dim(0)),
                     static_cast<Eigen::Index>(t.dim(1)));
}
template <typename T>
MutMap<T> view(Tensor<T>& t) {
  return MutMap<T>(t.raw(), static_cast<Eigen::Index>(t.dim(0)),
                   static_cast<Eigen::Index>(t.dim(1)));
}

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got " + to_string(s));
  }
}

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " +
                     to_string(b));
  }
}

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) +
                   " and " + to_string(b));
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    mismatch("matmul", a.shape(), b.shape());
  }
  Tensor<T> c({a.dim(0), b.dim(1)});
  view(c).noalias() = view(a) * view(b);
  return c;
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    mismatch("matmul_nt", a.shape(), b.shape());
  }
  Tensor<T> c({a.dim(0), b.dim(0)});
  view(c).noalias() = view(a) * view(b).transpose();
  return c;
}

template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    mismatch("matmul_tn", a.shape(), b.shape());
  }
  Tensor<T> c({a.dim(1), b.dim(1)});
  view(c).noalias() = view(a).transpose() * view(b);
  return c;
}

template <typename T>
MatmulGrads<T> matmul_backward(const Tensor<T>& a, const Tensor<T>& b,
                               const Tensor<T>& dc) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    mismatch("matmul_backward", a.shape(), b.shape());
  }
  if (dc.shape() != Shape{a.dim(0), b.dim(1)}) {
    mismatch("matmul_backward (upstream)", dc.shape(), Shape{a.dim(0), b.dim(1)});
  }
  return {matmul_nt(dc, b), matmul_tn(a, dc)};
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_rank(a.shape(), 2, "transpose");
  Tensor<T> out({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i) {
    for (std::size_t j = 0; j < a.dim(1); ++j) out.at(j, i) = a.at(i, j);
  }
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a.shape(), b.shape(), "add");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a.shape(), b.shape(), "sub");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a.shape(), b.shape(), "hadamard");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  Tensor<T> out = a;
  for (auto& v : out.data()) v *= factor;
  return out;
}

template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
  require_same(a.shape(), b.shape(), "add_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  require_rank(x.shape(), 2, "add_row_bias");
  if (bias.rank() != 1 || bias.dim(0) != x.dim(1)) {
    mismatch("add_row_bias", x.shape(), bias.shape());
  }
  Tensor<T> out = x;
  const std::size_t n = x.dim(1);
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    T* row = out.raw() + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += bias[j];
  }
  return out;
}

template <typename T>
Tensor<T> sum_rows(const Tensor<T>& x) {
  require_rank(x.shape(), 2, "sum_rows");
  const std::size_t n = x.dim(1);
  Tensor<T> out({n});
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    const T* row = x.raw() + i * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += row[j];
  }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  require_same(x.shape(), dy.shape(), "relu_backward");
  Tensor<T> out = dy;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(x[i] > T{0})) out[i] = T{0};
  }
  return out;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  require_rank(x.shape(), 2, "softmax_rows");
  Tensor<T> out(x.shape());
  const std::size_t n = x.dim(1);
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    const T* in = x.raw() + i * n;
    T* o = out.raw() + i * n;
    T row_max = in[0];
    for (std::size_t j = 1; j < n; ++j) row_max = std::max(row_max, in[j]);
    T total{0};
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp(in[j] - row_max);
      total += o[j];
    }
    const T inv = T{1} / total;
    for (std::size_t j = 0; j < n; ++j) o[j] *= inv;
  }
  return out;
}

template <typename T>
Tensor<T> softmax_rows_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  require_rank(y.shape(), 2, "softmax_rows_backward");
  require_same(y.shape(), dy.shape(), "softmax_rows_backward");
  Tensor<T> dx(y.shape());
  const std::size_t n = y.dim(1);
  for (std::size_t i = 0; i < y.dim(0); ++i) {
    const T* yr = y.raw() + i * n;
    const T* dyr = dy.raw() + i * n;
    T* dxr = dx.raw() + i * n;
    T dot{0};
    for (std::size_t j = 0; j < n; ++j) dot += yr[j] * dyr[j];
    for (std::size_t j = 0; j < n; ++j) dxr[j] = yr[j] * (dyr[j] - dot);
  }
  return dx;
}

template <typename T>
Tensor<T> layer_norm_rows(const Tensor<T>& x, const Tensor<T>& gamma,
                          const Tensor<T>& beta, LayerNormCache<T>* cache) {
  require_rank(x.shape(), 2, "layer_norm_rows");
  const std::size_t m = x.dim(0);
  const std::size_t n = x.dim(1);
  if (gamma.shape() != Shape{n} || beta.shape() != Shape{n}) {
    mismatch("layer_norm_rows", x.shape(), gamma.shape());
  }
  Tensor<T> normalized(x.shape());
  std::vector<T> inv_std(m);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const T* xr = x.raw() + i * n;
    T mu{0};
    for (std::size_t j = 0; j < n; ++j) mu += xr[j];
    mu /= static_cast<T>(n);
    T var{0};
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<T>(n);
    const T rstd = T{1} / std::sqrt(var + static_cast<T>(kLayerNormEps));
    inv_std[i] = rstd;
    T* nr = normalized.raw() + i * n;
    T* orow = out.raw() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      nr[j] = (xr[j] - mu) * rstd;
      orow[j] = nr[j] * gamma[j] + beta[j];
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

template <typename T>
Tensor<T> layer_norm_rows_backward(const LayerNormCache<T>& cache,
                                   const Tensor<T>& gamma, const Tensor<T>& dy,
                                   Tensor<T>& dgamma, Tensor<T>& dbeta) {
  require_same(cache.normalized.shape(), dy.shape(), "layer_norm_rows_backward");
  const std::size_t m = dy.dim(0);
  const std::size_t n = dy.dim(1);
  Tensor<T> dx(dy.shape());
  std::vector<T> g(n);
  for (std::size_t i = 0; i < m; ++i) {
    const T* nr = cache.normalized.raw() + i * n;
    const T* dyr = dy.raw() + i * n;
    T* dxr = dx.raw() + i * n;
    T mean_g{0};
    T mean_gn{0};
    for (std::size_t j = 0; j < n; ++j) {
      dgamma[j] += dyr[j] * nr[j];
      dbeta[j] += dyr[j];
      g[j] = dyr[j] * gamma[j];
      mean_g += g[j];
      mean_gn += g[j] * nr[j];
    }
    mean_g /= static_cast<T>(n);
    mean_gn /= static_cast<T>(n);
    const T rstd = cache.inv_std[i];
    for (std::size_t j = 0; j < n; ++j) {
      dxr[j] = rstd * (g[j] - mean_g - nr[j] * mean_gn);
    }
  }
  return dx;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_rank(x.shape(), 3, "global_avg_pool");
  const std::size_t positions = x.dim(0) * x.dim(1);
  const std::size_t c = x.dim(2);
  Tensor<T> q({c});
  for (std::size_t p = 0; p < positions; ++p) {
    const T* px = x.raw() + p * c;
    for (std::size_t k = 0; k < c; ++k) q[k] += px[k];
  }
  const T inv = T{1} / static_cast<T>(positions);
  for (auto& v : q.data()) v *= inv;
  return q;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& dq, const Shape& input_shape) {
  require_rank(input_shape, 3, "global_avg_pool_backward");
  if (dq.shape() != Shape{input_shape[2]}) {
    mismatch("global_avg_pool_backward", dq.shape(), input_shape);
  }
  const std::size_t positions = input_shape[0] * input_shape[1];
  const std::size_t c = input_shape[2];
  const T inv = T{1} / static_cast<T>(positions);
  Tensor<T> dx(input_shape);
  for (std::size_t p = 0; p < positions; ++p) {
    T* px = dx.raw() + p * c;
    for (std::size_t k = 0; k < c; ++k) px[k] = dq[k] * inv;
  }
  return dx;
}

namespace {

// [H x W x C] -> [H*W x 9*C] patch matrix, zero padded.
template <typename T>
Tensor<T> im2col3x3(const Tensor<T>& x) {
  const std::size_t h = x.dim(0);
  const std::size_t w = x.dim(1);
  const std::size_t c = x.dim(2);
  Tensor<T> cols({h * w, 9 * c});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      T* row = cols.raw() + (y * w + xx) * 9 * c;
      for (int ky = 0; ky < 3; ++ky) {
        const long sy = static_cast<long>(y) + ky - 1;
        for (int kx = 0; kx < 3; ++kx) {
          const long sx = static_cast<long>(xx) + kx - 1;
          T* dst = row + (ky * 3 + kx) * c;
          if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) {
            continue;
          }
          const T* src = x.raw() + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * c;
          std::copy(src, src + c, dst);
        }
      }
    }
  }
  return cols;
}

template <typename T>
Tensor<T> col2im3x3(const Tensor<T>& cols, const Shape& shape) {
  const std::size_t h = shape[0];
  const std::size_t w = shape[1];
  const std::size_t c = shape[2];
  Tensor<T> x(shape);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      const T* row = cols.raw() + (y * w + xx) * 9 * c;
      for (int ky = 0; ky < 3; ++ky) {
        const long sy = static_cast<long>(y) + ky - 1;
        for (int kx = 0; kx < 3; ++kx) {
          const long sx = static_cast<long>(xx) + kx - 1;
          if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) {
            continue;
          }
          const T* src = row + (ky * 3 + kx) * c;
          T* dst = x.raw() + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * c;
          for (std::size_t k = 0; k < c; ++k) dst[k] += src[k];
        }
      }
    }
  }
  return x;
}

void check_conv_shapes(const Shape& x, const Shape& weight, const char* op) {
  require_rank(x, 3, op);
  require_rank(weight, 2, op);
  if (weight[0] != 9 * x[2]) mismatch(op, x, weight);
}

}  // namespace

template <typename T>
Tensor<T> conv3x3(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  check_conv_shapes(x.shape(), weight.shape(), "conv3x3");
  if (bias.shape() != Shape{weight.dim(1)}) mismatch("conv3x3", weight.shape(), bias.shape());
  Tensor<T> y = add_row_bias(matmul(im2col3x3(x), weight), bias);
  return std::move(y).reshaped({x.dim(0), x.dim(1), weight.dim(1)});
}

template <typename T>
Conv3x3Grads<T> conv3x3_backward(const Tensor<T>& x, const Tensor<T>& weight,
                                 const Tensor<T>& dy, bool need_dx) {
  check_conv_shapes(x.shape(), weight.shape(), "conv3x3_backward");
  const Shape expected{x.dim(0), x.dim(1), weight.dim(1)};
  if (dy.shape() != expected) mismatch("conv3x3_backward (upstream)", dy.shape(), expected);
  const Tensor<T> dy2 = dy.reshaped({x.dim(0) * x.dim(1), weight.dim(1)});
  Conv3x3Grads<T> g;
  g.dweight = matmul_tn(im2col3x3(x), dy2);
  g.dbias = sum_rows(dy2);
  if (need_dx) g.dx = col2im3x3(matmul_nt(dy2, weight), x.shape());
  return g;
}

template <typename T>
T sum(const Tensor<T>& x) {
  T total{0};
  for (T v : x.data()) total += v;
  return total;
}

template <typename T>
T mean(const Tensor<T>& x) {
  return sum(x) / static_cast<T>(x.size());
}

template <typename T>
double squared_norm(const Tensor<T>& x) {
  double total = 0.0;
  for (T v : x.data()) total += static_cast<double>(v) * static_cast<double>(v);
  return total;
}

template <typename T>
bool all_finite(const Tensor<T>& x) {
  for (T v : x.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

#define MVLR_INSTANTIATE_OPS(T)                                                          \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> matmul_tn(const Tensor<T>&, const Tensor<T>&);                       \
  template MatmulGrads<T> matmul_backward(const Tensor<T>&, const Tensor<T>&,             \
                                          const Tensor<T>&);                              \
  template Tensor<T> transpose(const Tensor<T>&);                                         \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> hadamard(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> scale(const Tensor<T>&, T);                                          \
  template void add_inplace(Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> add_row_bias(const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> sum_rows(const Tensor<T>&);                                          \
  template Tensor<T> relu(const Tensor<T>&);                                              \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                      \
  template Tensor<T> softmax_rows_backward(const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> layer_norm_rows(const Tensor<T>&, const Tensor<T>&,                  \
                                     const Tensor<T>&, LayerNormCache<T>*);               \
  template Tensor<T> layer_norm_rows_backward(const LayerNormCache<T>&, const Tensor<T>&, \
                                              const Tensor<T>&, Tensor<T>&, Tensor<T>&);  \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                   \
  template Tensor<T> global_avg_pool_backward(const Tensor<T>&, const Shape&);            \
  template Tensor<T> conv3x3(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);       \
  template Conv3x3Grads<T> conv3x3_backward(const Tensor<T>&, const Tensor<T>&,           \
                                            const Tensor<T>&, bool);                      \
  template T sum(const Tensor<T>&);                                                       \
  template T mean(const Tensor<T>&);                                                      \
  template double squared_norm(const Tensor<T>&);                                        \
  template bool all_finite(const Tensor<T>&);

MVLR_INSTANTIATE_OPS(float)
MVLR_INSTANTIATE_OPS(double)

#undef MVLR_INSTANTIATE_OPS

}  // namespace mvlr
