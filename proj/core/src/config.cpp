// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "mvlr/random.hpp"

namespace mvlr {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ValidationError("config key '" + std::string(key) + "': cannot parse '" +
                        std::string(value) + "' as " + expected);
}

std::uint64_t to_u64(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value, "an unsigned integer");
  return out;
}

double to_double(std::string_view key, std::string_view value) {
  const std::string text(value);
  char* end = nullptr;
  const double out = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) bad_value(key, value, "a number");
  return out;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "a boolean");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string fmt_mix(const WeatherMix& mix) {
  std::string out;
  for (const auto& [weather, weight] : mix.weights) {
    if (!out.empty()) out += ',';
    out += std::string(to_string(weather)) + ":" + fmt_double(weight);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::string_view)>;

template <typename Field>
Setter size_field(Field field) {
  return [field](ExperimentConfig& c, std::string_view k, std::string_view v) {
    std::invoke(field, c) = static_cast<std::size_t>(to_u64(k, v));
  };
}

template <typename Field>
Setter double_field(Field field) {
  return [field](ExperimentConfig& c, std::string_view k, std::string_view v) {
    std::invoke(field, c) = to_double(k, v);
  };
}

template <typename Field>
Setter bool_field(Field field) {
  return [field](ExperimentConfig& c, std::string_view k, std::string_view v) {
    std::invoke(field, c) = to_bool(k, v);
  };
}

const std::vector<std::pair<std::string_view, Setter>>& setters() {
  static const std::vector<std::pair<std::string_view, Setter>> table = {
      {"batch_size", size_field([](ExperimentConfig& c) -> auto& { return c.train.batch_size; })},
      {"total_steps", size_field([](ExperimentConfig& c) -> auto& { return c.train.total_steps; })},
      {"lr_start", double_field([](ExperimentConfig& c) -> auto& { return c.train.lr_start; })},
      {"lr_end", double_field([](ExperimentConfig& c) -> auto& { return c.train.lr_end; })},
      {"lambda_perc", double_field([](ExperimentConfig& c) -> auto& { return c.train.lambda_perc; })},
      {"charbonnier_eps",
       double_field([](ExperimentConfig& c) -> auto& { return c.train.charbonnier_eps; })},
      {"grad_clip", double_field([](ExperimentConfig& c) -> auto& { return c.train.grad_clip; })},
      {"adam_beta1", double_field([](ExperimentConfig& c) -> auto& { return c.train.adam_beta1; })},
      {"adam_beta2", double_field([](ExperimentConfig& c) -> auto& { return c.train.adam_beta2; })},
      {"adam_eps", double_field([](ExperimentConfig& c) -> auto& { return c.train.adam_eps; })},
      {"seed", [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.train.seed = to_u64(k, v);
       }},
      {"ablation", [](ExperimentConfig& c, std::string_view, std::string_view v) {
         apply_ablation(c.train.model, parse_ablation(v));
       }},
      {"use_prior", bool_field([](ExperimentConfig& c) -> auto& { return c.train.model.use_prior; })},
      {"use_imb", bool_field([](ExperimentConfig& c) -> auto& { return c.train.model.use_imb; })},
      {"imb.enabled", bool_field([](ExperimentConfig& c) -> auto& { return c.train.model.use_imb; })},
      {"imb.capacity",
       size_field([](ExperimentConfig& c) -> auto& { return c.train.model.imb_capacity; })},
      {"imb.topk", size_field([](ExperimentConfig& c) -> auto& { return c.train.model.imb_topk; })},
      {"model.patch_size",
       size_field([](ExperimentConfig& c) -> auto& { return c.train.model.patch_size; })},
      {"model.feat_dim", size_field([](ExperimentConfig& c) -> auto& { return c.train.model.feat_dim; })},
      {"model.key_dim", size_field([](ExperimentConfig& c) -> auto& { return c.train.model.key_dim; })},
      {"model.encoder_blocks",
       size_field([](ExperimentConfig& c) -> auto& { return c.train.model.encoder_blocks; })},
      {"model.decoder_blocks",
       size_field([](ExperimentConfig& c) -> auto& { return c.train.model.decoder_blocks; })},
      {"model.ffn_dim", size_field([](ExperimentConfig& c) -> auto& { return c.train.model.ffn_dim; })},
      {"model.prior_tokens",
       size_field([](ExperimentConfig& c) -> auto& { return c.train.model.prior_tokens; })},
      {"model.prior_dim",
       size_field([](ExperimentConfig& c) -> auto& { return c.train.model.prior_dim; })},
      {"model.prior_hidden",
       size_field([](ExperimentConfig& c) -> auto& { return c.train.model.prior_hidden; })},
      {"data.train_count", size_field([](ExperimentConfig& c) -> auto& { return c.data.train_count; })},
      {"data.val_count", size_field([](ExperimentConfig& c) -> auto& { return c.data.val_count; })},
      {"data.height", size_field([](ExperimentConfig& c) -> auto& { return c.data.height; })},
      {"data.width", size_field([](ExperimentConfig& c) -> auto& { return c.data.width; })},
      {"data.severity_min",
       double_field([](ExperimentConfig& c) -> auto& { return c.data.severity_min; })},
      {"data.severity_max",
       double_field([](ExperimentConfig& c) -> auto& { return c.data.severity_max; })},
      {"data.weather", [](ExperimentConfig& c, std::string_view, std::string_view v) {
         c.data.mix = WeatherMix::parse(v);
       }},
      {"data.seed", [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.data.seed = to_u64(k, v);
       }},
      {"precision", [](ExperimentConfig& c, std::string_view, std::string_view v) {
         c.precision = parse_precision(v);
       }},
  };
  return table;
}

}  // namespace

FlatConfig FlatConfig::parse(std::string_view text, const std::string& source) {
  FlatConfig cfg;
  cfg.source_ = source;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) {
      throw ValidationError(where + ": expected 'key = value', got '" + std::string(line) + "'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (cfg.find(key)) throw ValidationError(where + ": duplicate key '" + key + "'");
    cfg.entries_.emplace_back(key, value);
  }
  return cfg;
}

FlatConfig FlatConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path.string());
}

const std::string* FlatConfig::find(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

void FlatConfig::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

std::string FlatConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

std::string_view to_string(Precision precision) {
  return precision == Precision::f32 ? "f32" : "f64";
}

Precision parse_precision(std::string_view text) {
  if (text == "f32" || text == "float") return Precision::f32;
  if (text == "f64" || text == "double") return Precision::f64;
  throw ValidationError("unknown precision '" + std::string(text) + "' (expected f32 or f64)");
}

DatasetOptions DataConfig::train_options(std::uint64_t run_seed) const {
  DatasetOptions o;
  o.count = train_count;
  o.mix = mix;
  o.height = height;
  o.width = width;
  o.severity_min = severity_min;
  o.severity_max = severity_max;
  o.seed = derive_seed(seed.value_or(run_seed), "train");
  return o;
}

DatasetOptions DataConfig::val_options(std::uint64_t run_seed) const {
  DatasetOptions o = train_options(run_seed);
  o.count = val_count;
  o.seed = derive_seed(seed.value_or(run_seed), "val");
  return o;
}

ExperimentConfig apply_config(const FlatConfig& flat, ExperimentConfig base) {
  const auto& table = setters();
  // Apply `ablation` first so explicit use_prior/use_imb lines override it.
  auto apply_one = [&](const std::string& key, const std::string& value) {
    for (const auto& [name, setter] : table) {
      if (name == key) {
        setter(base, key, value);
        return;
      }
    }
    throw ValidationError(flat.source() + ": unknown config key '" + key + "'");
  };
  if (const auto* a = flat.find("ablation")) apply_one("ablation", *a);
  for (const auto& [key, value] : flat.entries()) {
    if (key != "ablation") apply_one(key, value);
  }
  base.train.validate();
  return base;
}

FlatConfig model_config_entries(const ModelConfig& m, bool bank_frozen) {
  FlatConfig f;
  auto put = [&](const char* k, std::size_t v) { f.set(k, std::to_string(v)); };
  put("model.patch_size", m.patch_size);
  put("model.feat_dim", m.feat_dim);
  put("model.key_dim", m.key_dim);
  put("model.encoder_blocks", m.encoder_blocks);
  put("model.decoder_blocks", m.decoder_blocks);
  put("model.ffn_dim", m.ffn_dim);
  put("model.prior_tokens", m.prior_tokens);
  put("model.prior_dim", m.prior_dim);
  put("model.prior_hidden", m.prior_hidden);
  put("imb.capacity", m.imb_capacity);
  put("imb.topk", m.imb_topk);
  f.set("use_prior", fmt_bool(m.use_prior));
  f.set("use_imb", fmt_bool(m.use_imb));
  f.set("imb.frozen", fmt_bool(bank_frozen));
  return f;
}

ModelConfig parse_model_config(const FlatConfig& flat, bool* bank_frozen) {
  FlatConfig rest;
  bool frozen = false;
  for (const auto& [k, v] : flat.entries()) {
    if (k == "imb.frozen") {
      frozen = to_bool(k, v);
    } else if (k.starts_with("model.") || k.starts_with("imb.") || k == "use_prior" ||
               k == "use_imb") {
      rest.set(k, v);
    } else {
      throw ValidationError(flat.source() + ": unexpected model key '" + k + "'");
    }
  }
  ExperimentConfig base;
  base.train.model = ModelConfig{};
  const ModelConfig m = apply_config(rest, base).train.model;
  if (bank_frozen) *bank_frozen = frozen;
  return m;
}

FlatConfig experiment_config_entries(const ExperimentConfig& c) {
  FlatConfig f;
  const TrainConfig& t = c.train;
  f.set("batch_size", std::to_string(t.batch_size));
  f.set("total_steps", std::to_string(t.total_steps));
  f.set("lr_start", fmt_double(t.lr_start));
  f.set("lr_end", fmt_double(t.lr_end));
  f.set("lambda_perc", fmt_double(t.lambda_perc));
  f.set("charbonnier_eps", fmt_double(t.charbonnier_eps));
  f.set("grad_clip", fmt_double(t.grad_clip));
  f.set("adam_beta1", fmt_double(t.adam_beta1));
  f.set("adam_beta2", fmt_double(t.adam_beta2));
  f.set("adam_eps", fmt_double(t.adam_eps));
  f.set("seed", std::to_string(t.seed));
  const FlatConfig model_entries = model_config_entries(t.model, false);
  for (const auto& [k, v] : model_entries.entries()) {
    if (k != "imb.frozen") f.set(k, v);
  }
  f.set("data.train_count", std::to_string(c.data.train_count));
  f.set("data.val_count", std::to_string(c.data.val_count));
  f.set("data.height", std::to_string(c.data.height));
  f.set("data.width", std::to_string(c.data.width));
  f.set("data.severity_min", fmt_double(c.data.severity_min));
  f.set("data.severity_max", fmt_double(c.data.severity_max));
  f.set("data.weather", fmt_mix(c.data.mix));
  if (c.data.seed) f.set("data.seed", std::to_string(*c.data.seed));
  f.set("precision", std::string(to_string(c.precision)));
  return f;
}

}  // namespace mvlr
