// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mvlr/encoder.hpp"
#include "mvlr/grad_check.hpp"
#include "mvlr/ops.hpp"

using namespace mvlr;
using namespace mvlr::test;

TEST_CASE("patch grid arithmetic") {
  const auto img = randu({8, 8, 3}, 1);
  const auto embed = make_linear<double>(48, 16, 2);
  CHECK(patchify(img, 4, embed).shape() == Shape{4, 16});
  CHECK_THROWS_AS(patchify(randu({10, 8, 3}, 1), 4, embed), ShapeError);
  CHECK_THROWS_AS(extract_patches(randu({8, 6, 3}, 1), 4), ShapeError);
}

TEST_CASE("extract then assemble reproduces the image bit exactly") {
  const auto img = randu({12, 8, 3}, 3);
  const auto patches = extract_patches(img, 4);
  CHECK(patches.shape() == Shape{6, 48});
  CHECK(assemble_patches(patches, 12, 8, 4) == img);

  // Identity embedding: patchify is the raw patch layout.
  Linear<double> identity{Tensor<double>({48, 48}), Tensor<double>({48})};
  for (std::size_t i = 0; i < 48; ++i) identity.weight.at(i, i) = 1.0;
  CHECK(assemble_patches(patchify(img, 4, identity), 12, 8, 4) == img);
}

TEST_CASE("token zero embeds the top-left patch") {
  const auto img = randu({4, 4, 3}, 5);
  const auto embed = make_linear<double>(12, 5, 6);
  const auto tokens = patchify(img, 2, embed);
  for (std::size_t o = 0; o < 5; ++o) {
    double acc = embed.bias[o];
    std::size_t idx = 0;
    for (std::size_t py = 0; py < 2; ++py)
      for (std::size_t px = 0; px < 2; ++px)
        for (std::size_t c = 0; c < 3; ++c) acc += img.at(py, px, c) * embed.weight.at(idx++, o);
    CHECK(std::abs(tokens.at(0, o) - acc) < 1e-12);
  }
}

TEST_CASE("single prior row: every token receives the same update") {
  auto fusion = make_fusion<double>(6, 4, 7);
  const auto f = randn({5, 6}, 8);
  const ProjectedPrior<double> p{randn({1, 6}, 9)};
  const auto x = cross_attention_fuse(f, p, fusion);
  const auto expected = matmul(matmul(p.matrix, fusion.value), fusion.output);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      CHECK(std::abs(x.at(i, j) - f.at(i, j) - expected[j]) < 1e-12);
}

TEST_CASE("zero value weights leave only the residual") {
  auto fusion = make_fusion<double>(6, 4, 10);
  fusion.value.fill(0.0);
  const auto f = randn({5, 6}, 11);
  const ProjectedPrior<double> p{randn({3, 6}, 12)};
  CHECK(cross_attention_fuse(f, p, fusion) == f);
}

TEST_CASE("two tokens, two prior rows, d_k = 2 by hand") {
  FusionParams<double> fusion;
  fusion.query = Tensor<double>({2, 2}, {1.0, 0.0, 0.0, 1.0});
  fusion.key = Tensor<double>({2, 2}, {0.5, 0.0, 0.0, 2.0});
  fusion.value = Tensor<double>({2, 2}, {1.0, 1.0, 0.0, 1.0});
  fusion.output = Tensor<double>({2, 2}, {1.0, 0.0, 0.0, -1.0});
  const Tensor<double> f({2, 2}, {1.0, 0.0, 0.0, 1.0});
  const ProjectedPrior<double> p{Tensor<double>({2, 2}, {2.0, 0.0, 0.0, 1.0})};
  // K = P Wk = [[1, 0], [0, 2]], V = P Wv = [[2, 2], [0, 1]], Q = F.
  // Token 0 scores [1, 0] / sqrt 2; token 1 scores [0, 2] / sqrt 2.
  const double r = std::sqrt(2.0);
  const double a0 = std::exp(1.0 / r) / (std::exp(1.0 / r) + 1.0);
  const double a1 = 1.0 / (1.0 + std::exp(2.0 / r));
  const double expected[2][2] = {
      {1.0 + 2.0 * a0, -(2.0 * a0 + (1.0 - a0))},
      {0.0 + 2.0 * a1, 1.0 - (2.0 * a1 + (1.0 - a1))},
  };
  const auto x = cross_attention_fuse(f, p, fusion);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(x.at(i, j) - expected[i][j]) < 1e-10);
}

TEST_CASE("attention rows sum to one and prior row order does not matter") {
  auto fusion = make_fusion<double>(6, 5, 13);
  const auto f = randn({7, 6}, 14);
  const auto pm = randn({4, 6}, 15);
  FusionCache<double> cache;
  const auto x = cross_attention_fuse(f, ProjectedPrior<double>{pm}, fusion, &cache);
  for (std::size_t i = 0; i < 7; ++i) {
    double row = 0.0;
    for (std::size_t l = 0; l < 4; ++l) row += cache.attention.at(i, l);
    CHECK(std::abs(row - 1.0) < 1e-9);
  }
  Tensor<double> permuted({4, 6});
  const std::size_t order[4] = {3, 1, 0, 2};
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 6; ++c) permuted.at(r, c) = pm.at(order[r], c);
  const auto y = cross_attention_fuse(f, ProjectedPrior<double>{permuted}, fusion);
  CHECK(max_abs_diff(x, y) < 1e-12);
}

TEST_CASE("fusion dimension mismatch is a shape error") {
  auto fusion = make_fusion<double>(6, 4, 16);
  CHECK_THROWS_AS(cross_attention_fuse(randn({3, 5}, 1), ProjectedPrior<double>{randn({2, 5}, 2)},
                                       fusion),
                  ShapeError);
  CHECK_THROWS_AS(cross_attention_fuse(randn({3, 6}, 1), ProjectedPrior<double>{randn({2, 4}, 2)},
                                       fusion),
                  ShapeError);
}

TEST_CASE("fusion gradients w.r.t. features, prior and weights") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CAPTURE(seed);
    auto fusion = make_fusion<double>(5, 3, seed);
    const auto f0 = randn({4, 5}, seed + 100);
    const auto p0 = randn({3, 5}, seed + 200);
    const auto w = randn({4, 5}, seed + 300);
    auto grads_at = [&](const Tensor<double>& f, const Tensor<double>& p) {
      FusionCache<double> cache;
      cross_attention_fuse(f, ProjectedPrior<double>{p}, fusion, &cache);
      auto g = zeros_of(fusion);
      auto out = cross_attention_fuse_backward(fusion, cache, w, g);
      return std::make_pair(out, g);
    };
    CHECK(grad_check(
              [&](const Tensor<double>& f, Tensor<double>* g) {
                if (g) *g = grads_at(f, p0).first.d_features;
                return weighted_sum(cross_attention_fuse(f, ProjectedPrior<double>{p0}, fusion), w);
              },
              f0) < 1e-6);
    CHECK(grad_check(
              [&](const Tensor<double>& p, Tensor<double>* g) {
                if (g) *g = grads_at(f0, p).first.d_prior;
                return weighted_sum(cross_attention_fuse(f0, ProjectedPrior<double>{p}, fusion), w);
              },
              p0) < 1e-6);
    auto g = grads_at(f0, p0).second;
    const auto report = grad_check_params(
        [&] { return weighted_sum(cross_attention_fuse(f0, ProjectedPrior<double>{p0}, fusion), w); },
        list_of(fusion), tensors_of(g));
    CHECK(report.max_rel_error < 1e-6);
  }
}

TEST_CASE("encode output shape") {
  const auto params = make_encoder<double>(4, 64, 64, 2, 128, 1);
  const ProjectedPrior<double> p{randn({8, 64}, 2)};
  CHECK(encode(randu({32, 32, 3}, 3), p, params, true).shape() == Shape{8, 8, 64});
}

TEST_CASE("without the prior the encoder ignores it") {
  const auto params = make_encoder<double>(4, 8, 8, 1, 16, 4);
  const auto img = randu({8, 8, 3}, 5);
  const ProjectedPrior<double> p1{randn({3, 8}, 6)};
  const ProjectedPrior<double> p2{randn({3, 8}, 7)};
  CHECK(encode(img, p1, params, false) == encode(img, p2, params, false));
  CHECK(encode(img, p1, params, true) != encode(img, p2, params, true));

  EncoderCache<double> cache;
  encode(img, p1, params, false, &cache);
  auto grad = zeros_of(params);
  Tensor<double> d_prior({3, 8}, 5.0);
  encode_backward(params, cache, randn({2, 2, 8}, 8), grad, &d_prior);
  for (double v : d_prior.values()) CHECK(v == 0.0);
}

TEST_CASE("encoder gradients pass grad_check") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    CAPTURE(seed);
    auto params = make_encoder<double>(2, 6, 4, 2, 10, seed);
    const auto img = randu({4, 6, 3}, seed + 10);
    const auto p0 = randn({3, 6}, seed + 20);
    const std::size_t n = 2 * 3 * 6;
    auto loss = [&](const Tensor<double>& p) {
      return sum(encode(img, ProjectedPrior<double>{p}, params, true)) / static_cast<double>(n);
    };
    EncoderCache<double> cache;
    encode(img, ProjectedPrior<double>{p0}, params, true, &cache);
    auto grad = zeros_of(params);
    Tensor<double> d_prior;
    const Tensor<double> upstream({2, 3, 6}, 1.0 / static_cast<double>(n));
    encode_backward(params, cache, upstream, grad, &d_prior);

    const auto report = grad_check_params([&] { return loss(p0); }, list_of(params), tensors_of(grad));
    CHECK(report.max_rel_error < 1e-4);
    CHECK(grad_check(
              [&](const Tensor<double>& p, Tensor<double>* g) {
                if (g) *g = d_prior;
                return loss(p);
              },
              p0) < 1e-4);
  }
}
