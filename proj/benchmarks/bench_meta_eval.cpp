/*
 * Copyright 2026 The mqmkit Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include "mqmkit/meta_eval.hpp"
#include "support/generators.hpp"

namespace {

using namespace mqmkit;

void BM_SoftPairwiseAccuracy(benchmark::State& state) {
  SplitMix64 rng(1);
  const auto systems = static_cast<std::size_t>(state.range(0));
  const auto h = testing::random_matrix(rng, systems, 200, {0, -1, -2, -5, -6, -10, -25}, 0.0);
  const auto m = testing::random_matrix(rng, systems, 200, {0, -0.5, -1, -3, -7.5}, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(soft_pairwise_accuracy(h, m, {1000, 7, 1}));
}
BENCHMARK(BM_SoftPairwiseAccuracy)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_TieCalibratedAccuracy(benchmark::State& state) {
  SplitMix64 rng(2);
  const auto h = testing::random_matrix(rng, 10, static_cast<std::size_t>(state.range(0)), {0, -1, -5, -25}, 0.0);
  const auto m = testing::random_matrix(rng, 10, static_cast<std::size_t>(state.range(0)), {0, -1, -2, -3, -4}, 0.0);
  const auto pairs = item_pairs(h, m);
  for (auto _ : state) benchmark::DoNotOptimize(tie_calibrated_accuracy(pairs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}
BENCHMARK(BM_TieCalibratedAccuracy)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_KendallTauB(benchmark::State& state) {
  SplitMix64 rng(3);
  std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<double>(rng.below(50));
    y[i] = static_cast<double>(rng.below(50));
  }
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau_b(x, y));
}
BENCHMARK(BM_KendallTauB)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);

}  // namespace
