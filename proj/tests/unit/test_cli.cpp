// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "helpers.hpp"
#include "mvlr/checkpoint.hpp"
#include "mvlr/image_io.hpp"
#include "mvlr/synth.hpp"

using namespace mvlr;
using namespace mvlr::test;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Small model and short schedule so the end-to-end commands run in seconds.
std::filesystem::path write_tiny_config(const std::filesystem::path& dir) {
  const auto path = dir / "tiny.cfg";
  std::ofstream(path) << "# tiny end-to-end run\n"
                         "total_steps = 6\nbatch_size = 2\n"
                         "model.feat_dim = 16\nmodel.key_dim = 16\nmodel.ffn_dim = 32\n"
                         "model.encoder_blocks = 1\nmodel.decoder_blocks = 1\n"
                         "imb.capacity = 8\nimb.topk = 2\n"
                         "data.train_count = 4\ndata.val_count = 3\n"
                         "data.height = 16\ndata.width = 16\n";
  return path;
}

}  // namespace

TEST_CASE("usage and argument errors") {
  auto r = run({});
  CHECK(r.code == cli::kExitValidation);
  CHECK(r.err.find("synth-data") != std::string::npos);

  r = run({"--help"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("gradcheck") != std::string::npos);

  r = run({"frobnicate"});
  CHECK(r.code == cli::kExitValidation);
  CHECK_FALSE(r.err.empty());

  r = run({"gradcheck", "--bogus"});
  CHECK(r.code == cli::kExitValidation);
  CHECK(r.err.find("--bogus") != std::string::npos);

  r = run({"train", "--out", "x", "--ablation", "half"});
  CHECK(r.code == cli::kExitValidation);
}

TEST_CASE("missing config file is an I/O error naming the path") {
  const auto dir = scratch_dir("cli_missing");
  const auto missing = (dir / "c.cfg").string();
  const auto r = run({"train", "--config", missing, "--out", (dir / "ck").string()});
  CHECK(r.code == cli::kExitIo);
  CHECK(r.err.find(missing) != std::string::npos);
}

TEST_CASE("gradcheck on the tiny model") {
  const auto r = run({"gradcheck", "--seed", "1"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("max_rel_error") != std::string::npos);
  CHECK(r.out.find("selection_gap") != std::string::npos);
}

TEST_CASE("synth-data writes pairs and a manifest") {
  const auto dir = scratch_dir("cli_synth");
  const auto r = run({"synth-data", "--out", dir.string(), "--count", "3", "--height", "16",
                      "--width", "20", "--weather", "snow", "--seed", "4"});
  REQUIRE(r.code == cli::kExitOk);
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "deg_%05d.ppm", i);
    CHECK(read_ppm(dir / name).shape() == Shape{16, 20, 3});
  }
  const auto rows = read_manifest_csv(dir / "manifest.csv");
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) CHECK(row.weather == Weather::snow);
  CHECK(slurp(dir / "manifest.csv").rfind("index,seed,weather,severity\n", 0) == 0);

  CHECK(run({"synth-data", "--out", dir.string(), "--count", "0"}).code == cli::kExitValidation);
}

TEST_CASE("train, restore and evaluate end to end") {
  const auto dir = scratch_dir("cli_e2e");
  const auto cfg = write_tiny_config(dir).string();
  const auto ck1 = (dir / "ck1").string(), ck2 = (dir / "ck2").string();

  auto r = run({"train", "--config", cfg, "--seed", "3", "--out", ck1});
  REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
  r = run({"train", "--config", cfg, "--seed", "3", "--out", ck2});
  REQUIRE(r.code == cli::kExitOk);

  // Identical command lines give byte-identical artifacts.
  const auto entries = read_checkpoint_manifest(ck1);
  CHECK_FALSE(entries.empty());
  for (const auto& e : entries) CHECK(slurp(dir / "ck1" / e.file) == slurp(dir / "ck2" / e.file));
  CHECK(slurp(dir / "ck1" / "train_log.csv") == slurp(dir / "ck2" / "train_log.csv"));
  CHECK(slurp(dir / "ck1" / "train_log.csv").rfind("step,loss,char,perc,lr\n", 0) == 0);
  CHECK(std::filesystem::exists(dir / "ck1" / "train.cfg"));

  const auto model = load_checkpoint<double>(ck1);
  CHECK(model.bank.frozen);
  CHECK(model.config.feat_dim == 16);

  // Restore keeps the input size and writes a valid P6 file.
  const auto in = dir / "deg.ppm";
  write_ppm(in, degrade(gen_clean(2, 16, 24), {Weather::rain, 0.5, 2}));
  const auto outp = (dir / "out.ppm").string();
  r = run({"restore", "--ckpt", ck1, "--in", in.string(), "--out", outp, "--prior",
           "synth:rain:0.5"});
  REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
  CHECK(slurp(outp).rfind("P6\n", 0) == 0);
  CHECK(read_ppm(outp).shape() == Shape{16, 24, 3});
  const auto out2 = (dir / "out2.ppm").string();
  run({"restore", "--ckpt", ck1, "--in", in.string(), "--out", out2, "--prior", "synth:rain:0.5"});
  CHECK(slurp(outp) == slurp(out2));

  CHECK(run({"restore", "--ckpt", ck1, "--in", in.string(), "--out", outp, "--prior", "vlm"})
            .code == cli::kExitValidation);
  CHECK(run({"restore", "--ckpt", ck1, "--in", (dir / "none.ppm").string(), "--out", outp})
            .code == cli::kExitIo);
  CHECK(run({"restore", "--ckpt", (dir / "none").string(), "--in", in.string(), "--out", outp})
            .code == cli::kExitIo);

  const auto csv = (dir / "eval.csv").string();
  r = run({"evaluate", "--ckpt", ck1, "--config", cfg, "--seed", "3", "--out", csv});
  REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
  const std::string report = slurp(csv);
  CHECK(report.rfind("index,weather,severity,psnr_deg,psnr_restored,ssim_deg,ssim_restored\n", 0) ==
        0);
  CHECK(report.find("\nmean,") != std::string::npos);
}
