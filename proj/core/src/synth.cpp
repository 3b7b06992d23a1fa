// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mvlr/image_io.hpp"
#include "mvlr/random.hpp"

namespace mvlr {

namespace {

constexpr double kRainBrightness = 0.95;
constexpr double kSnowBrightness = 1.0;
constexpr double kMinSceneStd = 0.05;
constexpr std::size_t kMaxOverlayShapes = 100000;

double image_std(const Image& img) {
  double mean = 0.0;
  for (double v : img.data()) mean += v;
  mean /= static_cast<double>(img.size());
  double var = 0.0;
  for (double v : img.data()) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(img.size()));
}

Image render_scene(Rng& rng, std::size_t h, std::size_t w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  double base[3], gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = uniform(0.2, 0.8);
    gx[c] = uniform(-0.4, 0.4);
    gy[c] = uniform(-0.4, 0.4);
  }
  Image img({h, w, 3});
  const double sx = w > 1 ? 1.0 / static_cast<double>(w - 1) : 0.0;
  const double sy = h > 1 ? 1.0 / static_cast<double>(h - 1) : 0.0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) = base[c] + gx[c] * (x * sx - 0.5) + gy[c] * (y * sy - 0.5);
      }
    }
  }

  const int rects = 3 + static_cast<int>(u(rng) * 4.0);
  for (int r = 0; r < rects; ++r) {
    const double rw = uniform(0.125, 0.5) * static_cast<double>(w);
    const double rh = uniform(0.125, 0.5) * static_cast<double>(h);
    const double x0 = uniform(-0.1, 0.9) * static_cast<double>(w);
    const double y0 = uniform(-0.1, 0.9) * static_cast<double>(h);
    const double color[3] = {u(rng), u(rng), u(rng)};
    const double alpha = uniform(0.6, 1.0);
    for (std::size_t y = 0; y < h; ++y) {
      if (y < y0 || y >= y0 + rh) continue;
      for (std::size_t x = 0; x < w; ++x) {
        if (x < x0 || x >= x0 + rw) continue;
        for (int c = 0; c < 3; ++c) {
          double& v = img.at(y, x, c);
          v = (1.0 - alpha) * v + alpha * color[c];
        }
      }
    }
  }

  for (int k = 0; k < 2; ++k) {
    const double amp = uniform(0.03, 0.12);
    const double freq = uniform(0.15, 0.8);
    const double theta = uniform(0.0, std::numbers::pi);
    const double phase = uniform(0.0, 2.0 * std::numbers::pi);
    const double weight[3] = {uniform(0.5, 1.0), uniform(0.5, 1.0), uniform(0.5, 1.0)};
    const double cx = std::cos(theta);
    const double sn = std::sin(theta);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double wave = amp * std::sin(freq * (cx * x + sn * y) + phase);
        for (int c = 0; c < 3; ++c) img.at(y, x, c) += weight[c] * wave;
      }
    }
  }
  for (auto& v : img.data()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

void require_image(const Image& img, const char* op) {
  if (img.rank() != 3 || img.dim(2) != 3) {
    throw ShapeError(std::string(op) + ": expected an H x W x 3 image, got " +
                     to_string(img.shape()));
  }
}

void require_weather(const DegradationSpec& spec, std::initializer_list<Weather> allowed,
                     const char* op) {
  spec.validate();
  for (Weather w : allowed) {
    if (spec.weather == w) return;
  }
  throw ValidationError(std::string(op) + " does not apply to weather '" +
                        std::string(to_string(spec.weather)) + "'");
}

// Sets mask pixels and returns how many were newly covered.
std::size_t mark(Tensor<double>& mask, long y, long x) {
  if (y < 0 || x < 0 || y >= static_cast<long>(mask.dim(0)) || x >= static_cast<long>(mask.dim(1))) {
    return 0;
  }
  double& m = mask.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
  if (m != 0.0) return 0;
  m = 1.0;
  return 1;
}

Tensor<double> rain_mask(std::size_t h, std::size_t w, const DegradationSpec& spec) {
  Tensor<double> mask({h, w});
  Rng rng(derive_seed(spec.seed, "rain"));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double angle = (u(rng) - 0.5) * 0.8;  // radians from vertical
  const double dx = std::sin(angle);
  const double dy = std::cos(angle);
  const auto length = static_cast<long>(
      std::max(1.0, std::round(0.4 * spec.severity * static_cast<double>(std::min(h, w)))));
  const double target = kCoveragePerSeverity * spec.severity * static_cast<double>(h * w);
  std::size_t covered = 0;
  for (std::size_t n = 0; static_cast<double>(covered) < target && n < kMaxOverlayShapes; ++n) {
    const double x0 = u(rng) * static_cast<double>(w);
    const double y0 = u(rng) * static_cast<double>(h);
    for (long t = 0; t < length; ++t) {
      covered += mark(mask, std::lround(std::floor(y0 + t * dy)),
                      std::lround(std::floor(x0 + t * dx)));
    }
  }
  return mask;
}

Tensor<double> snow_mask(std::size_t h, std::size_t w, const DegradationSpec& spec) {
  Tensor<double> mask({h, w});
  Rng rng(derive_seed(spec.seed, "snow"));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double radius = 0.5 + 2.0 * spec.severity;
  const double target = kCoveragePerSeverity * spec.severity * static_cast<double>(h * w);
  std::size_t covered = 0;
  for (std::size_t n = 0; static_cast<double>(covered) < target && n < kMaxOverlayShapes; ++n) {
    const double cx = u(rng) * static_cast<double>(w);
    const double cy = u(rng) * static_cast<double>(h);
    const double rx = radius * (0.7 + 0.6 * u(rng));
    const double ry = radius * (0.7 + 0.6 * u(rng));
    const long y_lo = static_cast<long>(std::floor(cy - ry));
    const long y_hi = static_cast<long>(std::ceil(cy + ry));
    const long x_lo = static_cast<long>(std::floor(cx - rx));
    const long x_hi = static_cast<long>(std::ceil(cx + rx));
    for (long y = y_lo; y <= y_hi; ++y) {
      for (long x = x_lo; x <= x_hi; ++x) {
        const double ex = (x + 0.5 - cx) / rx;
        const double ey = (y + 0.5 - cy) / ry;
        if (ex * ex + ey * ey <= 1.0) covered += mark(mask, y, x);
      }
    }
  }
  return mask;
}

Image blend_overlay(const Image& img, const Tensor<double>& mask, double alpha, double brightness) {
  Image out = img;
  for (std::size_t y = 0; y < img.dim(0); ++y) {
    for (std::size_t x = 0; x < img.dim(1); ++x) {
      const double a = alpha * mask.at(y, x);
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < 3; ++c) {
        double& v = out.at(y, x, c);
        v = (1.0 - a) * v + a * brightness;
      }
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Image gen_clean(std::uint64_t seed, std::size_t height, std::size_t width) {
  if (height < kMinSceneSize || width < kMinSceneSize) {
    throw ValidationError("gen_clean: scene " + std::to_string(height) + "x" + std::to_string(width) +
                          " smaller than 8x8");
  }
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    Image img = render_scene(rng, height, width);
    if (image_std(img) >= kMinSceneStd) return img;
  }
}

Image apply_haze(const Image& img, const DegradationSpec& spec) {
  require_image(img, "apply_haze");
  require_weather(spec, {Weather::haze, Weather::mixed}, "apply_haze");
  if (spec.severity == 0.0) return img;
  const double beta = kHazeBetaPerSeverity * spec.severity;
  const std::size_t h = img.dim(0);
  Image out = img;
  for (std::size_t y = 0; y < h; ++y) {
    const double depth = h > 1 ? 1.0 - static_cast<double>(y) / static_cast<double>(h - 1) : 1.0;
    const double t = std::exp(-beta * depth);
    for (std::size_t x = 0; x < img.dim(1); ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        double& v = out.at(y, x, c);
        v = v * t + kAirlight * (1.0 - t);
      }
    }
  }
  return out;
}

Image apply_rain(const Image& img, const DegradationSpec& spec) {
  require_image(img, "apply_rain");
  require_weather(spec, {Weather::rain, Weather::mixed}, "apply_rain");
  if (spec.severity == 0.0) return img;
  return blend_overlay(img, rain_mask(img.dim(0), img.dim(1), spec), 0.3 + 0.6 * spec.severity,
                       kRainBrightness);
}

Image apply_snow(const Image& img, const DegradationSpec& spec) {
  require_image(img, "apply_snow");
  require_weather(spec, {Weather::snow}, "apply_snow");
  if (spec.severity == 0.0) return img;
  return blend_overlay(img, snow_mask(img.dim(0), img.dim(1), spec), 0.5 + 0.5 * spec.severity,
                       kSnowBrightness);
}

Image degrade(const Image& img, const DegradationSpec& spec) {
  switch (spec.weather) {
    case Weather::rain: return apply_rain(img, spec);
    case Weather::snow: return apply_snow(img, spec);
    case Weather::haze: return apply_haze(img, spec);
    case Weather::mixed: return apply_rain(apply_haze(img, spec), spec);
  }
  throw ValidationError("degrade: unknown weather");
}

Tensor<double> overlay_mask(std::size_t height, std::size_t width, const DegradationSpec& spec) {
  spec.validate();
  switch (spec.weather) {
    case Weather::rain:
    case Weather::mixed: return rain_mask(height, width, spec);
    case Weather::snow: return snow_mask(height, width, spec);
    case Weather::haze: return Tensor<double>({height, width});
  }
  throw ValidationError("overlay_mask: unknown weather");
}

double coverage(const Tensor<double>& mask) {
  std::size_t hits = 0;
  for (double v : mask.data()) hits += v != 0.0;
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

WeatherMix WeatherMix::parse(std::string_view text) {
  WeatherMix mix;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    std::string_view item = text.substr(pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      double weight = 1.0;
      const std::size_t colon = item.find(':');
      if (colon != std::string_view::npos) {
        const std::string_view w = item.substr(colon + 1);
        auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), weight);
        if (ec != std::errc() || ptr != w.data() + w.size()) {
          throw ValidationError("bad weather weight '" + std::string(w) + "'");
        }
        item = item.substr(0, colon);
      }
      mix.weights.emplace_back(parse_weather(item), weight);
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  mix.validate();
  return mix;
}

WeatherMix WeatherMix::uniform() {
  WeatherMix mix;
  for (Weather w : kAllWeather) mix.weights.emplace_back(w, 1.0);
  return mix;
}

WeatherMix WeatherMix::only(Weather weather) { return {{{weather, 1.0}}}; }

void WeatherMix::validate() const {
  double total = 0.0;
  for (const auto& [w, p] : weights) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("weather weights must be finite and non-negative");
    total += p;
  }
  if (weights.empty() || total <= 0.0) throw ValidationError("weather distribution is empty");
}

Weather WeatherMix::sample(double u) const {
  double total = 0.0;
  for (const auto& entry : weights) total += entry.second;
  double acc = 0.0;
  for (const auto& [w, p] : weights) {
    acc += p / total;
    if (u < acc && p > 0.0) return w;
  }
  for (auto it = weights.rbegin(); it != weights.rend(); ++it) {
    if (it->second > 0.0) return it->first;
  }
  return weights.back().first;
}

void DatasetOptions::validate() const {
  if (count < 1) throw ValidationError("dataset size must be at least 1");
  mix.validate();
  if (!(severity_min >= 0.0 && severity_max <= 1.0 && severity_min <= severity_max)) {
    throw ValidationError("severity range [" + std::to_string(severity_min) + ", " +
                          std::to_string(severity_max) + "] must lie within [0, 1]");
  }
  if (height < kMinSceneSize || width < kMinSceneSize) {
    throw ValidationError("dataset images must be at least 8x8");
  }
}

Dataset make_dataset(const DatasetOptions& options) {
  options.validate();
  Dataset ds;
  ds.samples.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    const std::uint64_t sample_seed = derive_seed(options.seed, i);
    Rng rng(derive_seed(sample_seed, "spec"));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DegradationSpec spec;
    spec.weather = options.mix.sample(u(rng));
    spec.severity = options.severity_min + (options.severity_max - options.severity_min) * u(rng);
    spec.seed = sample_seed;
    Image clean = gen_clean(sample_seed, options.height, options.width);
    Image degraded = degrade(clean, spec);
    ds.samples.push_back({std::move(clean), std::move(degraded), spec});
    ds.manifest.push_back({i, sample_seed, spec.weather, spec.severity});
  }
  return ds;
}

void write_manifest_csv(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << "index,seed,weather,severity\n";
  for (const auto& r : rows) {
    out << r.index << ',' << r.seed << ',' << to_string(r.weather) << ','
        << format_double(r.severity) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<ManifestRow> read_manifest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "index,seed,weather,severity") {
    throw FormatError(path.string() + ": missing header 'index,seed,weather,severity'");
  }
  std::vector<ManifestRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string index, seed, weather, severity;
    if (!std::getline(fields, index, ',') || !std::getline(fields, seed, ',') ||
        !std::getline(fields, weather, ',') || !std::getline(fields, severity)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
    }
    try {
      ManifestRow row;
      row.index = std::stoull(index);
      row.seed = std::stoull(seed);
      row.weather = parse_weather(weather);
      row.severity = std::stod(severity);
      row.spec().validate();
      rows.push_back(row);
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": malformed row '" + line + "'");
    } catch (const ValidationError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

namespace {

std::filesystem::path numbered(const std::filesystem::path& dir, const char* prefix, std::size_t i) {
  char name[32];
  std::snprintf(name, sizeof(name), "%s_%05zu.ppm", prefix, i);
  return dir / name;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const std::size_t index = dataset.manifest[i].index;
    write_ppm(numbered(dir, "clean", index), dataset.samples[i].clean);
    write_ppm(numbered(dir, "deg", index), dataset.samples[i].degraded);
  }
  write_manifest_csv(dir / "manifest.csv", dataset.manifest);
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.manifest = read_manifest_csv(dir / "manifest.csv");
  for (const auto& row : ds.manifest) {
    ds.samples.push_back({read_ppm(numbered(dir, "clean", row.index)),
                          read_ppm(numbered(dir, "deg", row.index)), row.spec()});
  }
  return ds;
}

}  // namespace mvlr
