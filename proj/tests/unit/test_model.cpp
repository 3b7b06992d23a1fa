// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "mvlr/model.hpp"
#include "mvlr/model_check.hpp"

using namespace mvlr;
using namespace mvlr::test;

TEST_CASE("tiny model full gradient check") {
  const auto r = model_grad_check(1);
  CHECK(r.report.max_rel_error < 1e-4);
  CHECK(r.selection_gap > kMinSelectionGap);
  CHECK(r.report.coordinates > 5000);
  CHECK(r.seconds < 60.0);
}

TEST_CASE("every ablation row passes the gradient check") {
  for (Ablation a : {Ablation::base, Ablation::vlm, Ablation::imb}) {
    CAPTURE(to_string(a));
    ModelConfig config = ModelConfig::tiny();
    apply_ablation(config, a);
    CHECK(model_grad_check(2, 1e-6, config).report.max_rel_error < 1e-4);
  }
}

TEST_CASE("untrained model is the identity") {
  ModelConfig config = ModelConfig::tiny();
  const auto model = init_model<double>(config, 5);
  const auto img = randu({16, 16, 3}, 6);
  const auto prior = synth_prior<double>({Weather::haze, 0.6, 1}, 1, config.prior_tokens, config.prior_dim);
  CHECK(model_forward(model, img, prior) == img);
}

TEST_CASE("ablation flags") {
  ModelConfig c;
  apply_ablation(c, Ablation::base);
  CHECK_FALSE(c.use_prior);
  CHECK_FALSE(c.use_imb);
  apply_ablation(c, parse_ablation("vlm"));
  CHECK(c.use_prior);
  CHECK_FALSE(c.use_imb);
  apply_ablation(c, parse_ablation("imb"));
  CHECK(ablation_of(c) == Ablation::imb);
  apply_ablation(c, parse_ablation("full"));
  CHECK(ablation_of(c) == Ablation::full);
  CHECK_THROWS_AS(parse_ablation("everything"), ValidationError);
}

TEST_CASE("bank size is validated") {
  ModelConfig c;
  c.imb_capacity = 8;
  c.imb_topk = 32;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK_THROWS_AS(init_model<float>(c, 1), ValidationError);
  c.imb_topk = 8;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parameter names are unique and stable") {
  auto model = init_model<double>(ModelConfig{}, 1);
  const auto params = model.parameters();
  std::set<std::string> names;
  for (const auto& p : params) names.insert(p.name);
  CHECK(names.size() == params.size());
  CHECK(params.front().name == "projection.hidden.weight");
  CHECK(names.count("imb.slots") == 1);
  CHECK(names.count("encoder.fusion.query") == 1);
  CHECK(names.count("decoder.tail.weight") == 1);
  CHECK(model.bank.slots.shape() == Shape{512, 64});
}

TEST_CASE("ablations share every common initial weight") {
  ModelConfig full = ModelConfig::tiny();
  ModelConfig base = full;
  apply_ablation(base, Ablation::base);
  auto a = init_model<double>(full, 9);
  auto b = init_model<double>(base, 9);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i].tensor == *pb[i].tensor);
}

TEST_CASE("disabling the prior makes the output independent of it") {
  ModelConfig config = ModelConfig::tiny();
  apply_ablation(config, Ablation::imb);
  auto model = init_model<double>(config, 3);
  model.decoder.tail_weight = randn({27, 3}, 4, 0.1);
  const auto img = randu({16, 16, 3}, 5);
  const auto p1 = synth_prior<double>({Weather::rain, 0.2, 1}, 1, 4, 8);
  const auto p2 = synth_prior<double>({Weather::snow, 0.9, 2}, 2, 4, 8);
  CHECK(model_forward(model, img, p1) == model_forward(model, img, p2));
  apply_ablation(model.config, Ablation::full);
  CHECK(model_forward(model, img, p1) != model_forward(model, img, p2));
}

TEST_CASE("casting between precisions") {
  auto model = init_model<double>(ModelConfig::tiny(), 4);
  model.bank.frozen = true;
  const auto f = cast_model<float>(model);
  CHECK(f.bank.frozen);
  auto back = cast_model<double>(f);
  auto pm = model.parameters();
  auto pb = back.parameters();
  for (std::size_t i = 0; i < pm.size(); ++i) {
    CHECK(max_abs_diff(*pm[i].tensor, *pb[i].tensor) < 1e-6);
  }
}
