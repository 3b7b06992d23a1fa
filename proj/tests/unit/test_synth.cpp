// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mvlr/image_io.hpp"
#include "mvlr/metrics.hpp"
#include "mvlr/synth.hpp"

using namespace mvlr;
using namespace mvlr::test;

namespace {

bool in_unit_range(const Image& img) {
  for (double v : img.values()) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

double pixel_std(const Image& img) {
  double m = 0.0;
  for (double v : img.values()) m += v;
  m /= static_cast<double>(img.size());
  double s = 0.0;
  for (double v : img.values()) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(img.size()));
}

}  // namespace

TEST_CASE("gen_clean is deterministic, bounded and textured") {
  const Image a = gen_clean(1, 64, 64);
  CHECK(a.shape() == Shape{64, 64, 3});
  CHECK(a == gen_clean(1, 64, 64));
  CHECK(in_unit_range(a));
  CHECK(pixel_std(a) >= 0.05);

  // Fraction of pixels (any channel) that differ between two seeds.
  const Image b = gen_clean(2, 64, 64);
  std::size_t differ = 0;
  for (std::size_t p = 0; p < 64 * 64; ++p) {
    bool d = false;
    for (std::size_t c = 0; c < 3; ++c) d = d || a[p * 3 + c] != b[p * 3 + c];
    differ += d ? 1 : 0;
  }
  CHECK(differ >= 64 * 64 / 10);

  for (std::uint64_t seed = 3; seed < 23; ++seed) {
    const Image img = gen_clean(seed, 32, 48);
    CHECK(in_unit_range(img));
    CHECK(pixel_std(img) >= 0.05);
  }
  CHECK_THROWS_AS(gen_clean(1, 7, 64), ValidationError);
}

TEST_CASE("haze follows the scattering model") {
  const Image img = gen_clean(4, 24, 20);
  CHECK(apply_haze(img, {Weather::haze, 0.0, 1}) == img);

  const DegradationSpec spec{Weather::haze, 0.55, 9};
  const Image out = apply_haze(img, spec);
  double worst = 0.0;
  for (std::size_t y = 0; y < 24; ++y) {
    const double d = 1.0 - static_cast<double>(y) / 23.0;
    const double t = std::exp(-3.0 * 0.55 * d);
    for (std::size_t x = 0; x < 20; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double expect = img.at(y, x, c) * t + 0.9 * (1.0 - t);
        worst = std::max(worst, std::abs(out.at(y, x, c) - expect));
      }
    }
  }
  CHECK(worst < 1e-12);

  // Depth 1 row at full severity sits within e^-3 of the airlight.
  const Image full = apply_haze(img, {Weather::haze, 1.0, 1});
  for (std::size_t x = 0; x < 20; ++x) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(std::abs(full.at(0, x, c) - 0.9) <= std::exp(-3.0));
    }
  }
  CHECK_THROWS_AS(apply_haze(img, {Weather::rain, 0.5, 1}), ValidationError);
  CHECK_THROWS_AS(apply_haze(img, {Weather::haze, 1.5, 1}), ValidationError);
}

TEST_CASE("rain and snow overlays") {
  const Image img = gen_clean(5, 64, 64);
  CHECK(apply_rain(img, {Weather::rain, 0.0, 3}) == img);
  CHECK(apply_snow(img, {Weather::snow, 0.0, 3}) == img);
  CHECK_THROWS_AS(apply_rain(img, {Weather::snow, 0.5, 1}), ValidationError);
  CHECK_THROWS_AS(apply_snow(img, {Weather::rain, 0.5, 1}), ValidationError);

  for (Weather w : {Weather::rain, Weather::snow}) {
    CAPTURE(to_string(w));
    CHECK(overlay_mask(64, 64, {w, 0.5, 11}) == overlay_mask(64, 64, {w, 0.5, 11}));
    double lo = 1.0, hi = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const double cov = coverage(overlay_mask(64, 64, {w, 0.5, seed}));
      lo = std::min(lo, cov);
      hi = std::max(hi, cov);
    }
    CHECK(lo >= 0.3 * 0.15 * 0.5);
    CHECK(hi <= 1.5 * 0.15 * 0.5);
    CHECK(in_unit_range(degrade(img, {w, 1.0, 2})));
  }
}

TEST_CASE("degraded PSNR does not increase with severity") {
  const double grid[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (Weather w : kAllWeather) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      CAPTURE(to_string(w));
      CAPTURE(seed);
      const Image clean = gen_clean(seed, 64, 64);
      double prev = 1e9;
      for (double s : grid) {
        const Image deg = degrade(clean, {w, s, seed});
        CHECK(in_unit_range(deg));
        const double p = psnr(clean, deg);
        if (s == 0.0) CHECK(deg == clean);
        CHECK(p <= prev);
        prev = p;
      }
    }
  }
}

TEST_CASE("mixed weather composes haze then rain") {
  const Image img = gen_clean(6, 32, 32);
  const DegradationSpec mixed{Weather::mixed, 0.6, 13};
  CHECK(degrade(img, mixed) == apply_rain(apply_haze(img, mixed), mixed));
}

TEST_CASE("weather mix parsing") {
  const WeatherMix m = WeatherMix::parse("rain:2,haze:1");
  REQUIRE(m.weights.size() == 2);
  CHECK(m.weights[0].first == Weather::rain);
  CHECK(m.sample(0.0) == Weather::rain);
  CHECK(m.sample(0.99) == Weather::haze);
  CHECK(WeatherMix::parse("snow").sample(0.5) == Weather::snow);
  CHECK_THROWS_AS(WeatherMix::parse(""), ValidationError);
  CHECK_THROWS_AS(WeatherMix::parse("fog"), ValidationError);
  CHECK_THROWS_AS(WeatherMix::parse("rain:0"), ValidationError);
}

TEST_CASE("make_dataset") {
  DatasetOptions opt;
  opt.count = 10;
  opt.height = 32;
  opt.width = 32;
  opt.seed = 7;
  const Dataset a = make_dataset(opt);
  const Dataset b = make_dataset(opt);
  REQUIRE(a.samples.size() == 10);
  CHECK(a.manifest == b.manifest);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(a.samples[i].degraded == b.samples[i].degraded);
    CHECK(a.manifest[i].index == i);
    CHECK(a.samples[i].spec == a.manifest[i].spec());
    CHECK(a.manifest[i].severity >= 0.3);
    CHECK(a.manifest[i].severity <= 0.9);
  }

  opt.mix = WeatherMix::only(Weather::rain);
  for (const auto& row : make_dataset(opt).manifest) CHECK(row.weather == Weather::rain);

  opt.count = 0;
  CHECK_THROWS_AS(make_dataset(opt), ValidationError);
  opt.count = 2;
  opt.mix.weights.clear();
  CHECK_THROWS_AS(make_dataset(opt), ValidationError);
}

TEST_CASE("mean degraded PSNR at severity 0.7 sits in the expected band") {
  DatasetOptions opt;
  opt.count = 50;
  opt.severity_min = 0.7;
  opt.severity_max = 0.7;
  opt.seed = 3;
  double acc = 0.0;
  for (const auto& s : make_dataset(opt).samples) acc += psnr(s.clean, s.degraded);
  const double mean_psnr = acc / 50.0;
  CHECK(mean_psnr >= 10.0);
  CHECK(mean_psnr <= 25.0);
}

TEST_CASE("dataset round trip through disk") {
  DatasetOptions opt;
  opt.count = 3;
  opt.height = 16;
  opt.width = 16;
  const Dataset d = make_dataset(opt);
  const auto dir = scratch_dir("synth_roundtrip");
  write_dataset(dir, d);
  CHECK(std::filesystem::exists(dir / "clean_00000.ppm"));
  CHECK(std::filesystem::exists(dir / "deg_00002.ppm"));
  CHECK(read_manifest_csv(dir / "manifest.csv") == d.manifest);

  const Dataset back = read_dataset(dir);
  REQUIRE(back.samples.size() == 3);
  // PPM stores 8-bit values, so the round trip matches the quantized images.
  CHECK(back.samples[1].clean == quantize_8bit(d.samples[1].clean));
  CHECK(back.samples[1].degraded == quantize_8bit(d.samples[1].degraded));
  CHECK(back.samples[1].spec == d.samples[1].spec);
  CHECK_THROWS_AS(read_dataset(dir / "missing"), IoError);
}
