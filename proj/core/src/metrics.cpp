// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace mvlr {

namespace {

void require_same_image(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
  if (a.size() != 3) throw ShapeError(std::string(op) + ": expected H x W x C, got " + to_string(a));
}

// Valid-mode separable filter of one channel of an [H x W] plane.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h, std::size_t w,
                                 const std::vector<double>& taps) {
  const std::size_t n = taps.size();
  const std::size_t ow = w - n + 1;
  const std::size_t oh = h - n + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += taps[k] * plane[y * w + x + k];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += taps[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak) {
  require_same_image(a.shape(), b.shape(), "psnr");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return 10.0 * std::log10(peak * peak / mse);
}

std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> taps(size);
  const double center = (static_cast<double>(size) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - center;
    taps[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    total += taps[i];
  }
  for (auto& t : taps) t /= total;
  return taps;
}

template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double peak) {
  require_same_image(a.shape(), b.shape(), "ssim");
  const std::size_t h = a.dim(0);
  const std::size_t w = a.dim(1);
  const std::size_t channels = a.dim(2);
  if (h < kSsimWindow || w < kSsimWindow) {
    throw ValidationError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                          " smaller than the " + std::to_string(kSsimWindow) + "x" +
                          std::to_string(kSsimWindow) + " window");
  }
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const std::vector<double> taps = gaussian_window();

  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> pa(h * w), pb(h * w), paa(h * w), pbb(h * w), pab(h * w);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < h * w; ++i) {
      const double x = static_cast<double>(a[i * channels + c]);
      const double y = static_cast<double>(b[i * channels + c]);
      pa[i] = x;
      pb[i] = y;
      paa[i] = x * x;
      pbb[i] = y * y;
      pab[i] = x * y;
    }
    const auto mu_a = filter_valid(pa, h, w, taps);
    const auto mu_b = filter_valid(pb, h, w, taps);
    const auto e_aa = filter_valid(paa, h, w, taps);
    const auto e_bb = filter_valid(pbb, h, w, taps);
    const auto e_ab = filter_valid(pab, h, w, taps);
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i];
      const double mb = mu_b[i];
      const double var_a = e_aa[i] - ma * ma;
      const double var_b = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

std::vector<EvalSummary> summarize(const std::vector<EvalRecord>& records) {
  std::vector<EvalSummary> out;
  for (Weather w : kAllWeather) {
    EvalSummary s;
    s.weather = w;
    for (const auto& r : records) {
      if (r.weather != w) continue;
      ++s.count;
      s.severity += r.severity;
      s.psnr_degraded += r.psnr_degraded;
      s.psnr_restored += r.psnr_restored;
      s.ssim_degraded += r.ssim_degraded;
      s.ssim_restored += r.ssim_restored;
    }
    if (s.count == 0) continue;
    const double n = static_cast<double>(s.count);
    s.severity /= n;
    s.psnr_degraded /= n;
    s.psnr_restored /= n;
    s.ssim_degraded /= n;
    s.ssim_restored /= n;
    out.push_back(s);
  }
  return out;
}

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << "index,weather,severity,psnr_deg,psnr_restored,ssim_deg,ssim_restored\n";
  for (const auto& r : records) {
    out << r.index << ',' << to_string(r.weather) << ',' << fmt(r.severity) << ','
        << fmt(r.psnr_degraded) << ',' << fmt(r.psnr_restored) << ',' << fmt(r.ssim_degraded)
        << ',' << fmt(r.ssim_restored) << '\n';
  }
  for (const auto& s : summarize(records)) {
    out << "mean," << to_string(s.weather) << ',' << fmt(s.severity) << ','
        << fmt(s.psnr_degraded) << ',' << fmt(s.psnr_restored) << ',' << fmt(s.ssim_degraded)
        << ',' << fmt(s.ssim_restored) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

template double psnr(const Tensor<float>&, const Tensor<float>&, double);
template double psnr(const Tensor<double>&, const Tensor<double>&, double);
template double ssim(const Tensor<float>&, const Tensor<float>&, double);
template double ssim(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace mvlr
