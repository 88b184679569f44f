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

#include <gtest/gtest.h>

#include "mqmkit/error.hpp"
#include "mqmkit/think_analytics.hpp"
#include "oracles/oracles.hpp"
#include "support/generators.hpp"

namespace mqmkit {
namespace {

JudgeRecord with_think(std::optional<std::string> think) {
  JudgeRecord r;
  r.think = std::move(think);
  return r;
}

TEST(Budget, Examples) {
  EXPECT_EQ(thinking_budget(with_think(std::nullopt)), (BudgetStats{0, 0, 0, TokenSource::None}));
  const auto b = thinking_budget(with_think("a b\n\nc d e"));
  EXPECT_EQ(b.tokens, 5);
  EXPECT_EQ(b.turns, 2);
  EXPECT_EQ(b.chars, 10);
  EXPECT_EQ(b.source, TokenSource::Proxy);
  EXPECT_EQ(thinking_budget(with_think("   \n")).turns, 0);
}

TEST(Budget, ReportedUsageWins) {
  auto r = with_think("a b c");
  r.usage = TokenUsage{100, 40, std::nullopt};
  EXPECT_EQ(thinking_budget(r).tokens, 40);
  EXPECT_EQ(thinking_budget(r).source, TokenSource::ReportedCompletion);
  r.usage->reasoning_tokens = 31;
  EXPECT_EQ(thinking_budget(r).tokens, 31);
  EXPECT_EQ(thinking_budget(r).source, TokenSource::ReportedReasoning);
}

TEST(Budget, MonotoneAndConsistent) {
  SplitMix64 rng(40);
  for (int i = 0; i < 500; ++i) {
    std::string think;
    const auto n = rng.below(20);
    for (std::uint64_t k = 0; k < n; ++k) think += rng.below(4) == 0 ? "\n\n" : testing::random_span_text(rng) + " ";
    const auto a = thinking_budget(with_think(think));
    const auto b = thinking_budget(with_think(think + " more words"));
    EXPECT_LE(a.tokens, b.tokens);
    if (a.tokens == 0) {
      EXPECT_EQ(a.turns, 0);
    }
  }
}

TEST(Bins, DefaultsPartitionNonPositiveLine) {
  const auto bins = default_difficulty_bins();
  ASSERT_EQ(bins.size(), 5U);
  EXPECT_EQ(bins[0].label, "0");
  for (double v : {0.0, -0.1, -1.0, -4.9, -5.0, -25.0, -25.1, -1000.0}) {
    int hits = 0;
    for (const auto& b : bins) hits += b.contains(v);
    EXPECT_EQ(hits, 1) << v;
  }
  EXPECT_EQ(find_bin(bins, -0.1), 1U);
  EXPECT_EQ(find_bin(bins, -1.0), 1U);
  EXPECT_EQ(find_bin(bins, -25.0), 3U);
  EXPECT_EQ(find_bin(bins, -25.1), 4U);
  EXPECT_FALSE(find_bin(bins, 1.0).has_value());
  EXPECT_THROW(parse_difficulty_bins("-1,-5"), UsageError);
}

TEST(Alignment, Tolerance) {
  EXPECT_EQ(alignment_tag(-2, -1, 1), AlignmentTag::Aligned);
  EXPECT_EQ(alignment_tag(-2.5, -1, 1), AlignmentTag::Misaligned);
  EXPECT_THROW(alignment_tag(0, 0, 0), UsageError);
}

TEST(BoxSummaryTest, Quartiles) {
  const auto s = box_summary({1, 2, 3, 4, 100});
  EXPECT_EQ(s.median, 3);
  EXPECT_EQ(s.q1, 2);
  EXPECT_EQ(s.q3, 4);
  EXPECT_EQ(s.whisker_high, 4);
  EXPECT_EQ(s.outliers, 1);
  const auto flat = box_summary({7, 7, 7});
  EXPECT_EQ(flat.median, 7);
  EXPECT_EQ(flat.q3 - flat.q1, 0);
  EXPECT_THROW(box_summary({}), PreconditionError);
}

TEST(BudgetByDifficulty, CellsKeptWhenEmpty) {
  const auto bins = default_difficulty_bins();
  std::vector<BudgetObservation> obs = {{10, 0, 0}, {12, 0, 0}, {14, 0, -0.5}};
  const auto cells = budget_by_difficulty(obs, bins, 1.0);
  ASSERT_EQ(cells.size(), 10U);
  EXPECT_EQ(cells[0].count, 3);
  ASSERT_TRUE(cells[0].summary);
  EXPECT_EQ(cells[0].summary->median, 12);
  for (std::size_t i = 1; i < cells.size(); ++i) {
    EXPECT_EQ(cells[i].count, 0);
    EXPECT_FALSE(cells[i].summary);
  }
  std::vector<BudgetObservation> bad = {{1, 2.0, 0}};
  EXPECT_THROW(budget_by_difficulty(bad, bins, 1.0), PreconditionError);
}

TEST(BudgetByDifficulty, IndependentBudgetGivesSimilarMedians) {
  SplitMix64 rng(41);
  const auto bins = default_difficulty_bins();
  const double levels[] = {0, -0.5, -3, -10, -40};
  std::vector<BudgetObservation> obs;
  for (int i = 0; i < 20000; ++i) {
    const double tokens = 400 + static_cast<double>(rng.below(201));
    obs.push_back({tokens, levels[rng.below(5)], 0});
  }
  const auto cells = budget_by_difficulty(obs, bins, 1000.0);
  for (const auto& c : cells)
    if (c.tag == AlignmentTag::Aligned) {
      ASSERT_TRUE(c.summary);
      EXPECT_NEAR(c.summary->median, 500, 8);
    }
}

ScoreMatrix row(const std::vector<double>& v) {
  std::vector<ItemKey> items;
  for (std::size_t i = 0; i < v.size(); ++i) items.push_back({"en-de", "d", static_cast<std::int64_t>(i)});
  ScoreMatrix m({"s"}, items);
  for (std::size_t i = 0; i < v.size(); ++i) m.set(0, i, v[i]);
  return m;
}

TEST(Distribution, OverestimationIndex) {
  const auto bins = default_difficulty_bins();
  const auto h = row({0, 0, -1, -5, -30});
  EXPECT_EQ(distribution_report(h, h, bins).overestimation_index, 0.0);
  EXPECT_EQ(distribution_report(row({-1, -1}), row({0, 0}), bins).overestimation_index, 1.0);
  const auto r = distribution_report(row({0, -1, -1, -1, -1, -1, -1, -1, -1, -1}),
                                     row({0, 0, 0, 0, -1, -1, -1, -1, -1, -1}), bins);
  EXPECT_DOUBLE_EQ(r.overestimation_index, 0.3);
  double total = 0;
  for (double f : r.metric.fractions) total += f;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(r.human.counts[0], 4);
}

ErrorSpan es(Severity s, const std::string& c, const std::string& text = "x") {
  return {s, Category::from_path(c), text};
}

TEST(Typology, Examples) {
  const SegmentKey k{"en-de", "s", "d", 0};
  const ErrorAnnotation human{k, "r1", {es(Severity::Minor, "accuracy/mistranslation")}};
  const ErrorAnnotation none{k, std::nullopt, {}};
  const auto same = discrepancy_typology(std::vector{human}, std::vector{human});
  EXPECT_EQ(same.judge_only + same.human_only, 0);

  const auto miss = discrepancy_typology(std::vector{none}, std::vector{human});
  ASSERT_EQ(miss.counts.size(), 1U);
  EXPECT_EQ(miss.counts[0].human_only, 1);
  EXPECT_EQ(miss.counts[0].category, (Category{"accuracy", "mistranslation"}));

  const ErrorAnnotation major{k, "r1", {es(Severity::Major, "accuracy/mistranslation")}};
  const auto shift = discrepancy_typology(std::vector{human}, std::vector{major});
  EXPECT_EQ(shift.judge_only, 1);
  EXPECT_EQ(shift.human_only, 1);
}

TEST(Typology, MatchesExhaustiveOracleAndSwapSymmetry) {
  SplitMix64 rng(43);
  for (int trial = 0; trial < 500; ++trial) {
    const SegmentKey k{"en-de", "s", "d", 0};
    const ErrorAnnotation j{k, std::nullopt, testing::random_spans(rng, 5)};
    const ErrorAnnotation h{k, "r", testing::random_spans(rng, 5)};
    const auto got = discrepancy_typology(std::vector{j}, std::vector{h});
    const auto want = oracle::typology(j.spans, h.spans);
    std::int64_t jo = 0, ho = 0;
    for (const auto& [key, c] : want) {
      jo += c.first;
      ho += c.second;
    }
    EXPECT_EQ(got.judge_only, jo);
    EXPECT_EQ(got.human_only, ho);
    for (const auto& c : got.counts) {
      const auto it = want.find({c.severity, c.category});
      ASSERT_NE(it, want.end());
      EXPECT_EQ(c.judge_only, it->second.first);
      EXPECT_EQ(c.human_only, it->second.second);
    }
    const auto swapped = discrepancy_typology(std::vector{h}, std::vector{j});
    EXPECT_EQ(swapped.judge_only, got.human_only);
    EXPECT_EQ(swapped.human_only, got.judge_only);
  }
}

}  // namespace
}  // namespace mqmkit
