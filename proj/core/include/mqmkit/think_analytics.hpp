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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mqmkit/data_model.hpp"

namespace mqmkit {

using TokenCounter = std::function<std::int64_t(std::string_view)>;

std::int64_t whitespace_token_count(std::string_view text);

enum class TokenSource { None, Proxy, ReportedReasoning, ReportedCompletion };
std::string_view to_string(TokenSource s);

struct BudgetStats {
  std::int64_t tokens = 0;
  std::int64_t turns = 0;  // non-empty paragraphs of the think text
  std::int64_t chars = 0;  // UTF-8 code points
  TokenSource source = TokenSource::None;

  bool operator==(const BudgetStats&) const = default;
};

// Reported reasoning-token usage wins over reported completion tokens, which
// win over `counter`. A record without think text costs nothing.
BudgetStats thinking_budget(const JudgeRecord& record, const TokenCounter& counter = whitespace_token_count);

// Paragraph count: maximal runs of non-blank lines.
std::int64_t count_turns(std::string_view think);

// Interval of human scores; a missing bound is infinite.
struct DifficultyBin {
  std::string label;
  std::optional<double> lower;
  bool lower_closed = true;
  std::optional<double> upper;
  bool upper_closed = false;

  bool contains(double v) const;
  bool operator==(const DifficultyBin&) const = default;
};

// {0}, [-1, 0), [-5, -1), [-25, -5), (-inf, -25).
std::vector<DifficultyBin> default_difficulty_bins();

// Descending edges "0,-1,-5,-25" -> the same shape as the defaults. The
// first edge must be 0.
std::vector<DifficultyBin> parse_difficulty_bins(std::string_view edges);

// Index of the unique bin containing v.
std::optional<std::size_t> find_bin(std::span<const DifficultyBin> bins, double v);

enum class AlignmentTag { Aligned, Misaligned };
std::string_view to_string(AlignmentTag t);

// Aligned iff |model - human| <= tau; tau must be positive.
AlignmentTag alignment_tag(double model_score, double human_score, double tau);

// Type-7 quartiles with Tukey whiskers (most extreme points within 1.5 IQR).
struct BoxSummary {
  double whisker_low = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_high = 0.0;
  std::int64_t outliers = 0;

  bool operator==(const BoxSummary&) const = default;
};

// Throws PreconditionError on an empty sample.
BoxSummary box_summary(std::vector<double> values);
double quantile_type7(std::span<const double> sorted, double p);

struct BudgetObservation {
  double tokens = 0.0;
  double human_score = 0.0;
  double model_score = 0.0;
};

struct BudgetCell {
  std::string bin;
  AlignmentTag tag = AlignmentTag::Aligned;
  std::int64_t count = 0;
  std::optional<BoxSummary> summary;  // empty cells are kept without one
};

// One cell per (bin, tag) in bin order, Aligned before Misaligned. A human
// score outside every bin is a PreconditionError.
std::vector<BudgetCell> budget_by_difficulty(std::span<const BudgetObservation> observations,
                                             std::span<const DifficultyBin> bins, double tau);

struct Histogram {
  std::vector<std::string> labels;
  std::vector<std::int64_t> counts;
  std::vector<double> fractions;  // counts / n
  std::int64_t unbinned = 0;
  std::int64_t n = 0;
  double zero_rate = 0.0;  // fraction of scores exactly 0
};

Histogram score_histogram(std::span<const double> values, std::span<const DifficultyBin> bins);

struct DistributionReport {
  Histogram metric;
  Histogram human;
  // human zero-rate - metric zero-rate; positive when the metric reports
  // errors where humans found none.
  double overestimation_index = 0.0;
};

// Uses the cells present in both matrices. Throws PreconditionError when
// there are none.
DistributionReport distribution_report(const ScoreMatrix& metric, const ScoreMatrix& human,
                                       std::span<const DifficultyBin> bins);

struct DiscrepancyCount {
  Severity severity = Severity::Minor;
  Category category;
  std::int64_t judge_only = 0;
  std::int64_t human_only = 0;
};

struct DiscrepancyReport {
  std::vector<DiscrepancyCount> counts;  // sorted by (severity, category)
  std::int64_t judge_only = 0;
  std::int64_t human_only = 0;
  std::int64_t segments = 0;  // segment keys present on both sides
};

// Per segment, spans are matched on (severity, category) ignoring span text;
// the unmatched rest are tallied. When a side has several annotations for a
// key, the first one in order of (rater, position) is used.
DiscrepancyReport discrepancy_typology(std::span<const ErrorAnnotation> judge,
                                       std::span<const ErrorAnnotation> human);

}  // namespace mqmkit
