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
#include "mqmkit/judge_parser.hpp"
#include "mqmkit/text.hpp"
#include "mqmkit/trajectory_factory.hpp"
#include "support/generators.hpp"
#include "support/paths.hpp"

namespace mqmkit {
namespace {

Segment seg() {
  Segment s;
  s.key = {"en-de", "sysA", "doc", 1};
  s.source = "The bank is closed.";
  s.reference = "Die Bank ist geschlossen.";
  s.hypothesis = "Das Ufer ist geschlossen.";
  return s;
}

ErrorAnnotation ann(std::vector<ErrorSpan> spans) { return {seg().key, "r1", std::move(spans)}; }

const auto kW = WeightScheme::standard();

TEST(Trajectory, OneMajor) {
  const auto t = synthesize_trajectory(seg(), ann({{Severity::Major, {"accuracy", "mistranslation"}, "Ufer"}}), kW,
                                       MaterialsMode::Src);
  EXPECT_NE(t.target.find("Major (accuracy/mistranslation): -5\n(-5) = -5"), std::string::npos);
  EXPECT_TRUE(t.target.ends_with("Score: -5"));
  EXPECT_NE(t.prompt.find("-25=\"Critical\", -5=\"Major\", -1=\"Minor\", -0.1=\"Minor/Fluency/Punctuation\", "
                          "0=\"No-error\""),
            std::string::npos);
  EXPECT_NE(t.prompt.find("The bank is closed."), std::string::npos);
  EXPECT_EQ(t.prompt.find("Die Bank"), std::string::npos);
  EXPECT_TRUE(validate_instance(t, kW).empty());
}

TEST(Trajectory, EmptyAnnotation) {
  const auto t = synthesize_trajectory(seg(), ann({}), kW, MaterialsMode::Ref);
  EXPECT_NE(t.target.find("Critical:\nno-error\n\nMajor:\nno-error\n\nMinor:\nno-error"), std::string::npos);
  EXPECT_TRUE(t.target.ends_with("Score: 0"));
  EXPECT_NE(t.prompt.find("Die Bank"), std::string::npos);
  EXPECT_EQ(t.prompt.find("The bank is closed."), std::string::npos);
}

TEST(Trajectory, JointRejected) {
  EXPECT_THROW(synthesize_trajectory(seg(), ann({}), kW, MaterialsMode::Joint), PreconditionError);
}

TEST(Trajectory, RoundTripsThroughParser) {
  SplitMix64 rng(50);
  for (int i = 0; i < 1000; ++i) {
    const auto a = ann(testing::random_spans(rng, 8));
    const auto t = synthesize_trajectory(seg(), a, kW, i % 2 ? MaterialsMode::Src : MaterialsMode::Ref);
    const auto split = split_think_answer(t.target);
    ASSERT_TRUE(split.think);
    auto parsed = parse_error_spans(*split.think, Strictness::Strict).annotation.spans;
    auto want = a.spans;
    std::sort(parsed.begin(), parsed.end());
    std::sort(want.begin(), want.end());
    EXPECT_EQ(parsed, want);
    EXPECT_EQ(parse_direct_score(split.answer, ScoreScale::Mqm), score_annotation(a, kW).value);
    EXPECT_TRUE(validate_instance(t, kW).empty());
    EXPECT_EQ(synthesize_trajectory(seg(), a, kW, i % 2 ? MaterialsMode::Src : MaterialsMode::Ref), t);
  }
}

bool has_kind(const std::vector<Violation>& v, ViolationKind k) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.kind == k; });
}

TEST(Validate, PlantedDefects) {
  const auto t = synthesize_trajectory(seg(), ann({{Severity::Major, {"accuracy", "mistranslation"}, "Ufer"}}), kW,
                                       MaterialsMode::Src);
  auto wrong = t;
  wrong.target = text::replace_all(t.target, "Score: -5", "Score: -4");
  EXPECT_TRUE(has_kind(validate_instance(wrong, kW), ViolationKind::ScoreConsistency));

  auto missing = t;
  missing.target = text::replace_all(t.target, "Minor:\nno-error\n", "");
  EXPECT_TRUE(has_kind(validate_instance(missing, kW), ViolationKind::Conformance));

  auto order = t;
  order.target = text::replace_all(t.target, "Critical:\nno-error", "Minor2");
  order.target = text::replace_all(order.target, "Minor:\nno-error", "Critical:\nno-error");
  order.target = text::replace_all(order.target, "Minor2", "Minor:\nno-error");
  EXPECT_TRUE(has_kind(validate_instance(order, kW), ViolationKind::BlockOrder));

  auto open = t;
  open.target = text::replace_all(t.target, "</think>", "");
  EXPECT_TRUE(has_kind(validate_instance(open, kW), ViolationKind::Conformance));
}

TEST(Dataset, FiltersAndOrdering) {
  auto a = seg();
  auto b = seg();
  b.key.seg_id = 0;
  auto empty = seg();
  empty.key.seg_id = 2;
  empty.source = " ";
  const std::vector<Segment> segs = {a, b, empty};
  const std::vector<ErrorAnnotation> anns = {{a.key, "r2", {}}, {a.key, "r1", {}}, {b.key, "r1", {}},
                                             {empty.key, "r1", {}}, {{"en-de", "x", "y", 9}, "r1", {}}};
  const auto r = synthesize_dataset(segs, anns, kW, MaterialsMode::Src);
  ASSERT_EQ(r.instances.size(), 3U);
  EXPECT_EQ(r.instances[0].provenance.key.seg_id, 0);
  EXPECT_EQ(r.instances[1].provenance.rater, "r1");
  EXPECT_EQ(r.instances[2].provenance.rater, "r2");
  EXPECT_EQ(r.filtered, 1);
  EXPECT_EQ(r.missing_segment, 1);
  EXPECT_EQ(r.instances[0].provenance.filters, "drop_empty_source=true");
}

std::vector<TrainingInstance> groups(const std::vector<std::pair<std::string, int>>& sizes) {
  std::vector<TrainingInstance> out;
  for (const auto& [lp, n] : sizes)
    for (int i = 0; i < n; ++i) {
      TrainingInstance t;
      t.lang_pair = lp;
      t.prompt = lp + std::to_string(i);
      out.push_back(t);
    }
  return out;
}

TEST(Balance, TwoLanguageGroups) {
  const auto data = groups({{"en-de", 9000}, {"zh-en", 5980}});
  const auto b = balance_dataset(data, std::nullopt, 7);
  EXPECT_EQ(b.instances.size(), 11960U);
  EXPECT_EQ(b.target_n, 5980);
  EXPECT_EQ(b.groups[0], (GroupSize{"en-de", 9000, 5980}));
  const auto again = balance_dataset(data, std::nullopt, 7);
  EXPECT_EQ(again.instances, b.instances);
  const auto other = balance_dataset(data, std::nullopt, 8);
  EXPECT_NE(other.instances, b.instances);
}

TEST(Balance, EqualGroupsUnchangedAndForcedTarget) {
  const auto data = groups({{"a", 5}, {"b", 5}});
  EXPECT_EQ(balance_dataset(data, std::nullopt, 1).instances, data);
  const auto forced = balance_dataset(groups({{"a", 3}, {"b", 10}}), 6, 1);
  EXPECT_EQ(forced.instances.size(), 9U);
  EXPECT_FALSE(forced.warnings.empty());
  EXPECT_THROW(balance_dataset(data, 0, 1), UsageError);
  EXPECT_THROW(balance_dataset(std::vector<TrainingInstance>{}, std::nullopt, 1), PreconditionError);
}

TEST(Balance, SubsampleIndices) {
  SplitMix64 rng(51);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = rng.below(50);
    const std::size_t k = n ? rng.below(n + 1) : 0;
    const auto idx = subsample_indices(n, k, i);
    ASSERT_EQ(idx.size(), k);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
    for (auto x : idx) EXPECT_LT(x, n);
  }
}

TEST(Dataset, JsonlRoundTrip) {
  const auto dir = testing::scratch_dir("dataset_jsonl");
  const auto t = synthesize_trajectory(seg(), ann({{Severity::Minor, {"fluency", "punctuation"}, ","}}), kW,
                                       MaterialsMode::Src);
  const std::vector<TrainingInstance> v = {t};
  write_dataset_jsonl(dir / "d.jsonl", v);
  EXPECT_EQ(read_dataset_jsonl(dir / "d.jsonl"), v);
}

}  // namespace
}  // namespace mqmkit
