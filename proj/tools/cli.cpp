// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

#include "mvlr/checkpoint.hpp"
#include "mvlr/config.hpp"
#include "mvlr/image_io.hpp"
#include "mvlr/model_check.hpp"
#include "mvlr/prior.hpp"
#include "mvlr/synth.hpp"
#include "mvlr/training.hpp"

namespace mvlr::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string ckpt;
  std::string in;
  std::string data;
  std::optional<std::string> ablation;
  std::optional<std::size_t> imb_capacity;
  std::optional<std::size_t> imb_topk;
  std::optional<std::size_t> steps;
  std::optional<std::string> precision;
  std::string prior = "synth";
  // synth-data
  std::optional<std::size_t> count;
  std::optional<std::string> weather;
  std::optional<std::size_t> height;
  std::optional<std::size_t> width;
  std::optional<double> severity_min;
  std::optional<double> severity_max;
  // gradcheck
  double step = 1e-6;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

// Config file (if any) overlaid with command-line flags.
ExperimentConfig resolve_config(const Options& o) {
  ExperimentConfig cfg;
  if (o.config) cfg = apply_config(FlatConfig::load(*o.config));
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.ablation) apply_ablation(cfg.train.model, parse_ablation(*o.ablation));
  if (o.imb_capacity) cfg.train.model.imb_capacity = *o.imb_capacity;
  if (o.imb_topk) cfg.train.model.imb_topk = *o.imb_topk;
  if (o.steps) cfg.train.total_steps = *o.steps;
  if (o.precision) cfg.precision = parse_precision(*o.precision);
  if (o.count) cfg.data.train_count = *o.count;
  if (o.weather) cfg.data.mix = WeatherMix::parse(*o.weather);
  if (o.height) cfg.data.height = *o.height;
  if (o.width) cfg.data.width = *o.width;
  if (o.severity_min) cfg.data.severity_min = *o.severity_min;
  if (o.severity_max) cfg.data.severity_max = *o.severity_max;
  cfg.train.validate();
  return cfg;
}

// "synth", "synth:<weather>:<severity>[:<seed>]" or "file:<path>".
PriorEmbedding<double> resolve_prior(const std::string& text, const ModelConfig& model,
                                     std::uint64_t default_seed) {
  if (text.starts_with("file:")) return load_prior<double>(text.substr(5));
  if (text != "synth" && !text.starts_with("synth:")) {
    throw ValidationError("--prior must be synth[:weather:severity[:seed]] or file:<path>, got '" +
                          text + "'");
  }
  DegradationSpec spec{Weather::mixed, 0.5, default_seed};
  if (text.size() > 5) {
    std::vector<std::string> parts;
    std::size_t pos = 6;
    while (true) {
      const std::size_t colon = text.find(':', pos);
      parts.push_back(text.substr(pos, colon - pos));
      if (colon == std::string::npos) break;
      pos = colon + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) {
      throw ValidationError("--prior synth expects synth:<weather>:<severity>[:<seed>], got '" +
                            text + "'");
    }
    spec.weather = parse_weather(parts[0]);
    try {
      std::size_t used = 0;
      spec.severity = std::stod(parts[1], &used);
      if (used != parts[1].size()) throw std::invalid_argument("trailing");
      if (parts.size() == 3) {
        spec.seed = std::stoull(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("trailing");
      }
    } catch (const std::logic_error&) {
      throw ValidationError("--prior: cannot parse '" + text + "'");
    }
  }
  spec.validate();
  return synth_prior<double>(spec, spec.seed, model.prior_tokens, model.prior_dim);
}

int cmd_synth_data(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(o);
  DatasetOptions opts = cfg.data.train_options(cfg.train.seed);
  opts.seed = cfg.data.seed.value_or(cfg.train.seed);
  const Dataset data = make_dataset(opts);
  write_dataset(o.out, data);
  out << "wrote " << data.samples.size() << " pairs to " << o.out << "\n";
  return kExitOk;
}

template <typename T>
void train_and_save(const ExperimentConfig& cfg, const Dataset& train, const fs::path& dir,
                    std::ostream& out) {
  const std::size_t every = std::max<std::size_t>(1, cfg.train.total_steps / 20);
  std::vector<StepStats> log;
  const auto start = std::chrono::steady_clock::now();
  ModelParams<T> model = train_model<T>(cfg.train, train, &log, [&](const StepStats& s) {
    if (s.step % every == 0 || s.step + 1 == cfg.train.total_steps) {
      out << "step " << s.step << "/" << cfg.train.total_steps << " loss " << fmt("%.6f", s.loss)
          << " lr " << fmt("%.3g", s.lr) << "\n";
    }
  });
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  model.bank.frozen = true;
  save_checkpoint(dir, model);
  write_train_log(dir / "train_log.csv", log);
  out << "trained " << cfg.train.total_steps << " steps in " << fmt("%.1f", seconds) << " s; "
      << "checkpoint in " << dir.string() << "\n";
}

int cmd_train(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(o);
  const Dataset train = o.data.empty() ? make_dataset(cfg.data.train_options(cfg.train.seed))
                                       : read_dataset(o.data);
  if (train.samples.empty()) throw ValidationError("training set is empty");
  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream f(dir / "train.cfg", std::ios::trunc);
    if (!f) throw IoError("cannot create " + (dir / "train.cfg").string());
    f << experiment_config_entries(cfg).to_text();
  }
  if (cfg.precision == Precision::f64) {
    train_and_save<double>(cfg, train, dir, out);
  } else {
    train_and_save<float>(cfg, train, dir, out);
  }
  return kExitOk;
}

int cmd_restore(const Options& o, std::ostream& out) {
  const ModelParams<double> model = load_checkpoint<double>(o.ckpt);
  const Tensor<double> img = read_ppm(o.in);
  const PriorEmbedding<double> prior = resolve_prior(o.prior, model.config, o.seed.value_or(0));
  const Tensor<double> restored = model_forward(model, img, prior);
  write_ppm(o.out, restored);
  out << "restored " << o.in << " -> " << o.out << "\n";
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const ModelParams<double> model = load_checkpoint<double>(o.ckpt);
  Dataset data;
  if (!o.data.empty()) {
    data = read_dataset(o.data);
  } else {
    const ExperimentConfig cfg = resolve_config(o);
    data = make_dataset(cfg.data.val_options(cfg.train.seed));
  }
  const auto records = evaluate_model(model, data);
  write_eval_csv(o.out, records);
  for (const auto& s : summarize(records)) {
    out << to_string(s.weather) << ": n=" << s.count << " psnr " << fmt("%.3f", s.psnr_degraded)
        << " -> " << fmt("%.3f", s.psnr_restored) << " dB, ssim " << fmt("%.4f", s.ssim_degraded)
        << " -> " << fmt("%.4f", s.ssim_restored) << "\n";
  }
  out << "mean psnr " << fmt("%.3f", mean_degraded_psnr(records)) << " -> "
      << fmt("%.3f", mean_restored_psnr(records)) << " dB; report " << o.out << "\n";
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  ModelConfig config = ModelConfig::tiny();
  if (o.ablation) apply_ablation(config, parse_ablation(*o.ablation));
  const ModelGradCheck r = model_grad_check(o.seed.value_or(1), o.step, config);
  out << "max_rel_error " << fmt("%.3e", r.report.max_rel_error) << " at "
      << r.report.worst_tensor << "[" << r.report.worst_index << "]"
      << " coordinates " << r.report.coordinates << " selection_gap "
      << fmt("%.3e", r.selection_gap) << " time " << fmt("%.2f", r.seconds) << " s\n";
  return r.report.max_rel_error < 1e-4 ? kExitOk : kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adverse-weather image restoration with degradation priors and a memory bank",
               "mvlr"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth-data", "Write clean/degraded PPM pairs and a manifest");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--config", o.config, "Config file (data.* keys)");
  synth->add_option("--seed", o.seed, "Dataset seed");
  synth->add_option("--count", o.count, "Number of pairs");
  synth->add_option("--weather", o.weather, "Weather mix, e.g. rain,snow or rain:2,haze:1");
  synth->add_option("--height", o.height, "Image height");
  synth->add_option("--width", o.width, "Image width");
  synth->add_option("--severity-min", o.severity_min, "Lower severity bound");
  synth->add_option("--severity-max", o.severity_max, "Upper severity bound");

  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint directory");
  train->add_option("--out", o.out, "Checkpoint directory")->required();
  train->add_option("--config", o.config, "Config file");
  train->add_option("--seed", o.seed, "Run seed");
  train->add_option("--data", o.data, "Training pairs from synth-data (default: synthesize)");
  train->add_option("--ablation", o.ablation, "base, vlm, imb or full");
  train->add_option("--imb-capacity", o.imb_capacity, "Memory slots K");
  train->add_option("--imb-topk", o.imb_topk, "Retrieved slots k");
  train->add_option("--steps", o.steps, "Override total_steps");
  train->add_option("--precision", o.precision, "f32 or f64");

  auto* restore = app.add_subcommand("restore", "Restore one PPM image");
  restore->add_option("--ckpt", o.ckpt, "Checkpoint directory")->required();
  restore->add_option("--in", o.in, "Degraded P6 image")->required();
  restore->add_option("--out", o.out, "Restored P6 image")->required();
  restore->add_option("--prior", o.prior, "synth[:weather:severity[:seed]] or file:<path>");
  restore->add_option("--seed", o.seed, "Scene seed for a synthetic prior (training uses 0)");

  auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM report for a checkpoint");
  evaluate->add_option("--ckpt", o.ckpt, "Checkpoint directory")->required();
  evaluate->add_option("--out", o.out, "CSV report path")->required();
  evaluate->add_option("--data", o.data, "Pairs from synth-data (default: synthesized val split)");
  evaluate->add_option("--config", o.config, "Config file for the synthesized split");
  evaluate->add_option("--seed", o.seed, "Run seed for the synthesized split");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the tiny model");
  gradcheck->add_option("--seed", o.seed, "Seed");
  gradcheck->add_option("--step", o.step, "Central-difference step");
  gradcheck->add_option("--ablation", o.ablation, "base, vlm, imb or full");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (synth->parsed()) return cmd_synth_data(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (restore->parsed()) return cmd_restore(o, out);
    if (evaluate->parsed()) return cmd_evaluate(o, out);
    return cmd_gradcheck(o, out);
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace mvlr::cli
