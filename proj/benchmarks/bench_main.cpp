// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "mvlr/layers.hpp"
#include "mvlr/metrics.hpp"
#include "mvlr/ops.hpp"
#include "mvlr/random.hpp"
#include "mvlr/training.hpp"

namespace {

using namespace mvlr;

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = normal_tensor<float>({n, n}, 1.0, 1);
  const auto b = normal_tensor<float>({n, n}, 1.0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

// One transformer block over the 256 tokens of a 64x64 image at patch 4.
void BM_BlockForward(benchmark::State& state) {
  const auto block = make_transformer_block<float>(64, 128, 3);
  const auto x = normal_tensor<float>({256, 64}, 1.0, 4);
  for (auto _ : state) benchmark::DoNotOptimize(block_forward(block, x));
}
BENCHMARK(BM_BlockForward);

void BM_BlockBackward(benchmark::State& state) {
  const auto block = make_transformer_block<float>(64, 128, 3);
  const auto x = normal_tensor<float>({256, 64}, 1.0, 4);
  const auto dy = normal_tensor<float>({256, 64}, 1.0, 5);
  BlockCache<float> cache;
  block_forward(block, x, &cache);
  auto grad = block;
  for (auto _ : state) benchmark::DoNotOptimize(block_backward(block, cache, dy, grad));
}
BENCHMARK(BM_BlockBackward);

void BM_TrainStep(benchmark::State& state) {
  TrainConfig config;
  ModelParams<float> model = init_model<float>(config.model, 1);
  Trainer<float> trainer(model, config);
  DatasetOptions opt;
  opt.count = config.batch_size;
  const Dataset data = make_dataset(opt);
  std::vector<TrainingSample<float>> samples;
  std::vector<const TrainingSample<float>*> batch;
  for (const auto& s : data.samples) {
    samples.push_back(make_training_sample<float>(s, config.model, trainer.proxy()));
  }
  for (const auto& s : samples) batch.push_back(&s);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.train_step_with_lr(batch, 1e-5));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const auto a = uniform_tensor<double>({64, 64, 3}, 0.0, 1.0, 6);
  const auto b = uniform_tensor<double>({64, 64, 3}, 0.0, 1.0, 7);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim);

}  // namespace

BENCHMARK_MAIN();
