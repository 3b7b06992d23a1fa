// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mvlr/grad_check.hpp"
#include "mvlr/loss.hpp"
#include "mvlr/ops.hpp"

using namespace mvlr;
using namespace mvlr::test;

TEST_CASE("charbonnier closed forms") {
  const auto img = randu({8, 8, 3}, 1);
  CHECK(charbonnier(img, img, 1e-3) == 1e-3);
  CHECK(charbonnier(img.cast<float>(), img.cast<float>(), 1e-3) == 1e-3);
  const Tensor<double> a({1}, 0.8), b({1}, 0.5);
  CHECK(std::abs(charbonnier(a, b, 1e-3) - std::sqrt(0.3 * 0.3 + 1e-6)) < 1e-15);
}

TEST_CASE("charbonnier matches a loop oracle") {
  const auto a = randu({4, 4, 3}, 2);
  const auto b = randu({4, 4, 3}, 3);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += std::sqrt(d * d + 1e-6);
  }
  CHECK(std::abs(charbonnier(a, b) - acc / 48.0) < 1e-12);
  CHECK_THROWS_AS(charbonnier(a, randu({4, 4, 2}, 1)), ShapeError);
}

TEST_CASE("perceptual proxy") {
  const PerceptualProxy<double> proxy;
  REQUIRE(proxy.layers().size() == 2);
  CHECK(proxy.layers()[0].weight.shape() == Shape{27, kPerceptualWidth});
  CHECK(proxy.layers()[1].weight.shape() == Shape{9 * kPerceptualWidth, kPerceptualWidth});

  const auto a = randu({8, 8, 3}, 4);
  const auto b = randu({8, 8, 3}, 5);
  CHECK(proxy.loss(a, a) == 0.0);
  CHECK(proxy.loss(a, b) > 0.0);
  CHECK_THROWS_AS(proxy.loss(a, randu({8, 4, 3}, 6)), ShapeError);

  // Direct recomputation through the frozen layers.
  double expected = 0.0;
  Tensor<double> fa = a, fb = b;
  for (const auto& layer : proxy.layers()) {
    fa = relu(conv3x3(fa, layer.weight, layer.bias));
    fb = relu(conv3x3(fb, layer.weight, layer.bias));
    double sq = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) sq += (fa[i] - fb[i]) * (fa[i] - fb[i]);
    expected += sq / static_cast<double>(fa.size());
  }
  CHECK(std::abs(proxy.loss(a, b) - expected) < 1e-10);

  // Same seed, same extractor.
  const PerceptualProxy<double> again;
  CHECK(again.layers()[1].weight == proxy.layers()[1].weight);
}

TEST_CASE("total loss composition") {
  const PerceptualProxy<double> proxy;
  const auto a = randu({8, 8, 3}, 7);
  const auto b = randu({8, 8, 3}, 8);
  CHECK(total_loss(a, b, 0.0, 1e-3, proxy).total == charbonnier(a, b, 1e-3));
  CHECK(total_loss(a, a, 0.05, 1e-3, proxy).total == 1e-3);
  const auto t = total_loss(a, b, 0.05, 1e-3, proxy);
  CHECK(t.total == t.charbonnier + 0.05 * t.perceptual);
  CHECK_THROWS_AS(total_loss(a, b, -1.0, 1e-3, proxy), ValidationError);

  // The arithmetic of the weighting: 0.2 + 0.05 * 1.0.
  LossTerms manual{0.0, 0.2, 1.0};
  manual.total = manual.charbonnier + 0.05 * manual.perceptual;
  CHECK(manual.total == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("loss gradients pass grad_check") {
  const PerceptualProxy<double> proxy;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CAPTURE(seed);
    const auto target = randu({6, 5, 3}, seed);
    const auto features = proxy.features(target);
    const auto x0 = randu({6, 5, 3}, seed + 20);
    CHECK(grad_check(
              [&](const Tensor<double>& x, Tensor<double>* g) {
                if (g) *g = charbonnier_backward(x, target);
                return charbonnier(x, target);
              },
              x0) < 1e-6);
    CHECK(grad_check(
              [&](const Tensor<double>& x, Tensor<double>* g) {
                if (g) *g = proxy.backward(x, proxy.features(x), features);
                return proxy.loss(x, target);
              },
              x0) < 1e-6);
    CHECK(grad_check(
              [&](const Tensor<double>& x, Tensor<double>* g) {
                return total_loss(x, target, 0.05, 1e-3, proxy, &features, g).total;
              },
              x0) < 1e-6);
  }
}
