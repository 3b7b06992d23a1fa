// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/loss.hpp"

#include <cmath>

#include "mvlr/ops.hpp"
#include "mvlr/random.hpp"

namespace mvlr {

namespace {

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
}

}  // namespace

template <typename T>
double charbonnier(const Tensor<T>& pred, const Tensor<T>& target, double eps) {
  require_same(pred.shape(), target.shape(), "charbonnier");
  const double eps2 = eps * eps;
  // sqrt(d^2 + eps^2) = eps + d^2 / (sqrt(d^2 + eps^2) + eps); accumulating
  // only the excess keeps equal images at exactly eps.
  double excess = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    const double d2 = d * d;
    excess += d2 / (std::sqrt(d2 + eps2) + eps);
  }
  return eps + excess / static_cast<double>(pred.size());
}

template <typename T>
Tensor<T> charbonnier_backward(const Tensor<T>& pred, const Tensor<T>& target, double eps) {
  require_same(pred.shape(), target.shape(), "charbonnier_backward");
  const double eps2 = eps * eps;
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  Tensor<T> grad(pred.shape());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    grad[i] = static_cast<T>(d / std::sqrt(d * d + eps2) * inv_n);
  }
  return grad;
}

template <typename T>
PerceptualProxy<T>::PerceptualProxy(std::uint64_t seed, std::size_t width) {
  std::size_t in = 3;
  for (std::size_t l = 0; l < 2; ++l) {
    const double he = std::sqrt(2.0 / static_cast<double>(9 * in));
    layers_.push_back({normal_tensor<T>({9 * in, width}, he, derive_seed(seed, l)),
                       Tensor<T>({width})});
    in = width;
  }
}

template <typename T>
typename PerceptualProxy<T>::Features PerceptualProxy<T>::features(const Tensor<T>& img) const {
  Features out;
  const Tensor<T>* x = &img;
  for (const auto& layer : layers_) {
    out.maps.push_back(relu(conv3x3(*x, layer.weight, layer.bias)));
    x = &out.maps.back();
  }
  return out;
}

template <typename T>
double PerceptualProxy<T>::loss(const Features& pred, const Features& target) const {
  double total = 0.0;
  for (std::size_t l = 0; l < pred.maps.size(); ++l) {
    const auto& a = pred.maps[l];
    const auto& b = target.maps[l];
    require_same(a.shape(), b.shape(), "perceptual");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      acc += d * d;
    }
    total += acc / static_cast<double>(a.size());
  }
  return total;
}

template <typename T>
double PerceptualProxy<T>::loss(const Tensor<T>& pred, const Tensor<T>& target) const {
  require_same(pred.shape(), target.shape(), "perceptual");
  return loss(features(pred), features(target));
}

template <typename T>
Tensor<T> PerceptualProxy<T>::backward(const Tensor<T>& pred, const Features& pred_features,
                                       const Features& target_features) const {
  const std::size_t depth = layers_.size();
  Tensor<T> upstream;
  for (std::size_t li = depth; li-- > 0;) {
    const auto& a = pred_features.maps[li];
    const auto& b = target_features.maps[li];
    require_same(a.shape(), b.shape(), "perceptual_backward");
    const double scale = 2.0 / static_cast<double>(a.size());
    Tensor<T> d_map(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
      d_map[i] = static_cast<T>(scale * (static_cast<double>(a[i]) - static_cast<double>(b[i])));
    }
    if (li + 1 < depth) add_inplace(d_map, upstream);
    const Tensor<T> d_pre = relu_backward(a, d_map);
    const Tensor<T>& input = li == 0 ? pred : pred_features.maps[li - 1];
    upstream = conv3x3_backward(input, layers_[li].weight, d_pre, true).dx;
  }
  return upstream;
}

template <typename T>
LossTerms total_loss(const Tensor<T>& pred, const Tensor<T>& target, double lambda_perc,
                     double eps, const PerceptualProxy<T>& proxy,
                     const typename PerceptualProxy<T>::Features* target_features,
                     Tensor<T>* d_pred) {
  require_same(pred.shape(), target.shape(), "total_loss");
  if (lambda_perc < 0.0) throw ValidationError("lambda_perc must be non-negative");
  LossTerms terms;
  terms.charbonnier = charbonnier(pred, target, eps);
  if (d_pred) *d_pred = charbonnier_backward(pred, target, eps);
  if (lambda_perc > 0.0) {
    typename PerceptualProxy<T>::Features own_target;
    if (!target_features) {
      own_target = proxy.features(target);
      target_features = &own_target;
    }
    const auto pred_features = proxy.features(pred);
    terms.perceptual = proxy.loss(pred_features, *target_features);
    if (d_pred) {
      Tensor<T> d_perc = proxy.backward(pred, pred_features, *target_features);
      for (std::size_t i = 0; i < d_perc.size(); ++i) {
        (*d_pred)[i] += static_cast<T>(lambda_perc) * d_perc[i];
      }
    }
  }
  terms.total = terms.charbonnier + lambda_perc * terms.perceptual;
  return terms;
}

#define MVLR_INSTANTIATE_LOSS(T)                                                              \
  template double charbonnier(const Tensor<T>&, const Tensor<T>&, double);                    \
  template Tensor<T> charbonnier_backward(const Tensor<T>&, const Tensor<T>&, double);        \
  template class PerceptualProxy<T>;                                                          \
  template LossTerms total_loss(const Tensor<T>&, const Tensor<T>&, double, double,           \
                                const PerceptualProxy<T>&,                                    \
                                const typename PerceptualProxy<T>::Features*, Tensor<T>*);

MVLR_INSTANTIATE_LOSS(float)
MVLR_INSTANTIATE_LOSS(double)

}  // namespace mvlr
