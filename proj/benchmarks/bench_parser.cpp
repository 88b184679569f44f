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

#include "mqmkit/judge_parser.hpp"
#include "mqmkit/mqm_scorer.hpp"
#include "support/generators.hpp"

namespace {

using namespace mqmkit;

std::vector<std::string> completions(std::size_t n) {
  SplitMix64 rng(4);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(format_error_blocks(testing::random_spans(rng, 8)));
  return out;
}

void BM_ParseErrorSpans(benchmark::State& state) {
  const auto docs = completions(256);
  const auto strictness = state.range(0) ? Strictness::Lenient : Strictness::Strict;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(parse_error_spans(docs[i++ % docs.size()], strictness));
}
BENCHMARK(BM_ParseErrorSpans)->Arg(0)->Arg(1);

void BM_ParseDirectScore(benchmark::State& state) {
  const std::string answer = "Critical:\nno-error\nMajor:\naccuracy - \"x\"\nMinor:\nno-error\nScore: -5";
  for (auto _ : state) benchmark::DoNotOptimize(parse_direct_score(answer, ScoreScale::Mqm));
}
BENCHMARK(BM_ParseDirectScore);

void BM_ScoreSpans(benchmark::State& state) {
  SplitMix64 rng(5);
  const auto spans = testing::random_spans(rng, 32);
  const auto w = WeightScheme::standard();
  for (auto _ : state) benchmark::DoNotOptimize(score_spans(spans, w));
}
BENCHMARK(BM_ScoreSpans);

}  // namespace
