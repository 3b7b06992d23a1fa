// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "mvlr/checkpoint.hpp"
#include "mvlr/config.hpp"
#include "mvlr/training.hpp"

using namespace mvlr;
using namespace mvlr::test;

TEST_CASE("flat config parsing") {
  const auto f = FlatConfig::parse("# run\nseed = 7\n\n  lr_start=0.001   # faster\nname = a b\n");
  REQUIRE(f.entries().size() == 3);
  CHECK(*f.find("seed") == "7");
  CHECK(*f.find("lr_start") == "0.001");
  CHECK(*f.find("name") == "a b");
  CHECK(f.find("missing") == nullptr);
  CHECK(FlatConfig::parse(f.to_text()).entries() == f.entries());

  CHECK_THROWS_AS(FlatConfig::parse("seed 7"), ValidationError);
  CHECK_THROWS_AS(FlatConfig::parse(" = 7"), ValidationError);
  CHECK_THROWS_AS(FlatConfig::parse("a = 1\na = 2"), ValidationError);
  try {
    FlatConfig::parse("a = 1\nbroken", "run.cfg");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("run.cfg:2") != std::string::npos);
  }
  try {
    FlatConfig::load("/nonexistent/run.cfg");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/run.cfg") != std::string::npos);
  }
}

TEST_CASE("experiment config keys") {
  const auto flat = FlatConfig::parse(
      "batch_size = 2\ntotal_steps = 50\nlr_start = 1e-3\nseed = 9\n"
      "ablation = vlm\nimb.capacity = 32\nimb.topk = 4\nmodel.feat_dim = 32\n"
      "data.train_count = 10\ndata.weather = rain:2,haze:1\ndata.seed = 4\nprecision = f64\n");
  const ExperimentConfig c = apply_config(flat);
  CHECK(c.train.batch_size == 2);
  CHECK(c.train.total_steps == 50);
  CHECK(c.train.lr_start == 1e-3);
  CHECK(c.train.seed == 9);
  CHECK(c.train.model.use_prior);
  CHECK_FALSE(c.train.model.use_imb);
  CHECK(c.train.model.imb_capacity == 32);
  CHECK(c.train.model.imb_topk == 4);
  CHECK(c.train.model.feat_dim == 32);
  CHECK(c.data.train_count == 10);
  CHECK(c.data.mix.weights.size() == 2);
  CHECK(c.data.seed == 4u);
  CHECK(c.precision == Precision::f64);

  // Explicit flags override the ablation preset regardless of line order.
  const auto over = apply_config(FlatConfig::parse("use_imb = true\nablation = base\n"));
  CHECK_FALSE(over.train.model.use_prior);
  CHECK(over.train.model.use_imb);

  CHECK_THROWS_AS(apply_config(FlatConfig::parse("learning_rate = 1")), ValidationError);
  CHECK_THROWS_AS(apply_config(FlatConfig::parse("seed = abc")), ValidationError);
  CHECK_THROWS_AS(apply_config(FlatConfig::parse("lr_end = 1")), ValidationError);
  CHECK_THROWS_AS(apply_config(FlatConfig::parse("ablation = half")), ValidationError);
  CHECK_THROWS_AS(apply_config(FlatConfig::parse("imb.capacity = 8\nimb.topk = 32")),
                  ValidationError);

  // Serialized entries load back to the same configuration.
  const ExperimentConfig back = apply_config(experiment_config_entries(c));
  CHECK(back.train == c.train);
  CHECK(back.data.train_count == c.data.train_count);
  CHECK(back.data.seed == c.data.seed);
  CHECK(back.precision == c.precision);
}

TEST_CASE("dataset seeds derive from the run seed") {
  DataConfig d;
  CHECK(d.train_options(1).seed != d.val_options(1).seed);
  CHECK(d.train_options(1).seed != d.train_options(2).seed);
  d.seed = 5;
  CHECK(d.train_options(1).seed == d.train_options(2).seed);
  CHECK(d.val_options(1).count == d.val_count);
}

TEST_CASE("model config round trip") {
  ModelConfig m = ModelConfig::tiny();
  m.use_prior = false;
  bool frozen = false;
  const ModelConfig back = parse_model_config(model_config_entries(m, true), &frozen);
  CHECK(back == m);
  CHECK(frozen);
  CHECK_THROWS_AS(parse_model_config(FlatConfig::parse("seed = 1")), ValidationError);
}

TEST_CASE("checkpoint round trip") {
  ModelConfig mc = ModelConfig::tiny();
  ModelParams<float> model = init_model<float>(mc, 11);
  model.bank.frozen = true;
  const auto dir = scratch_dir("ckpt_roundtrip");
  save_checkpoint(dir, model);
  CHECK(std::filesystem::exists(dir / kCheckpointManifest));
  CHECK(std::filesystem::exists(dir / kCheckpointModelConfig));

  const auto entries = read_checkpoint_manifest(dir);
  auto params = model.parameters();
  REQUIRE(entries.size() == params.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(entries[i].name == params[i].name);
    CHECK(entries[i].shape == params[i].tensor->shape());
    CHECK(entries[i].dtype == DType::f32);
    CHECK(std::filesystem::exists(dir / entries[i].file));
  }

  ModelParams<float> back = load_checkpoint<float>(dir);
  CHECK(back.config == model.config);
  CHECK(back.bank.frozen);
  auto bp = back.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) CHECK(*bp[i].tensor == *params[i].tensor);

  // Loading into double converts exactly.
  ModelParams<double> wide = load_checkpoint<double>(dir);
  auto wp = wide.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(*wp[i].tensor == params[i].tensor->cast<double>());
  }

  // Saving twice gives byte-identical files.
  const auto dir2 = scratch_dir("ckpt_roundtrip2");
  save_checkpoint(dir2, back);
  for (const auto& e : entries) {
    std::ifstream a(dir / e.file, std::ios::binary), b(dir2 / e.file, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  ModelParams<double> model = init_model<double>(ModelConfig::tiny(), 1);
  const auto dir = scratch_dir("ckpt_corrupt");
  save_checkpoint(dir, model);

  CHECK_THROWS_AS(load_checkpoint<double>(dir / "missing"), IoError);

  // Drop a manifest line.
  std::string manifest;
  {
    std::ifstream in(dir / kCheckpointManifest);
    manifest.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto first_nl = manifest.find('\n');
  {
    std::ofstream out(dir / kCheckpointManifest);
    out << manifest.substr(first_nl + 1);
  }
  CHECK_THROWS_AS(load_checkpoint<double>(dir), FormatError);
  {
    std::ofstream out(dir / kCheckpointManifest);
    out << "garbage line\n";
  }
  CHECK_THROWS_AS(read_checkpoint_manifest(dir), FormatError);

  // Model config that disagrees with the stored shapes.
  {
    std::ofstream out(dir / kCheckpointManifest);
    out << manifest;
  }
  CHECK_NOTHROW(load_checkpoint<double>(dir));
  ModelConfig wider = ModelConfig::tiny();
  wider.feat_dim = 24;
  wider.key_dim = 24;
  {
    std::ofstream out(dir / kCheckpointModelConfig);
    out << model_config_entries(wider, false).to_text();
  }
  CHECK_THROWS_AS(load_checkpoint<double>(dir), FormatError);
}
