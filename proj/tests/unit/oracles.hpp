// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Direct-formula metric implementations, written independently of the
// library code so they can serve as oracles.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mvlr/tensor.hpp"

namespace mvlr::test {

inline double oracle_psnr(const Tensor<double>& a, const Tensor<double>& b) {
  long double sq = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - b[i];
    sq += d * d;
  }
  const long double mse = sq / a.size();
  return static_cast<double>(10.0L * std::log10(1.0L / mse));
}

// Full 2D Gaussian window evaluated at every valid position, channel by channel.
inline double oracle_ssim(const Tensor<double>& a, const Tensor<double>& b) {
  constexpr int n = 11;
  double w[n][n];
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double di = i - 5, dj = j - 5;
      w[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
      total += w[i][j];
    }
  }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const std::size_t h = a.dim(0), wd = a.dim(1), ch = a.dim(2);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t y = 0; y + n <= h; ++y) {
      for (std::size_t x = 0; x + n <= wd; ++x) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            const double k = w[i][j] / total;
            const double va = a.at(y + i, x + j, c), vb = b.at(y + i, x + j, c);
            mx += k * va;
            my += k * vb;
            sxx += k * va * va;
            syy += k * vb * vb;
            sxy += k * va * vb;
          }
        }
        const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
        acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    }
  }
  return acc / static_cast<double>(count);
}

// Indices of the k largest scores; a stable sort keeps the lower index first on ties.
inline std::vector<std::size_t> full_sort_oracle(const Tensor<double>& s, std::size_t k) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  idx.resize(k);
  return idx;
}

}  // namespace mvlr::test
