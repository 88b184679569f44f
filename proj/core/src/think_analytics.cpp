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

#include "mqmkit/think_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "mqmkit/error.hpp"
#include "mqmkit/text.hpp"

namespace mqmkit {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string edge_label(double v) { return text::format_number(v); }

}  // namespace

std::int64_t whitespace_token_count(std::string_view text) {
  std::int64_t n = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

std::string_view to_string(TokenSource s) {
  switch (s) {
    case TokenSource::None: return "none";
    case TokenSource::Proxy: return "proxy";
    case TokenSource::ReportedReasoning: return "reasoning_tokens";
    case TokenSource::ReportedCompletion: return "completion_tokens";
  }
  return "none";
}

std::int64_t count_turns(std::string_view think) {
  std::int64_t turns = 0;
  bool in_paragraph = false;
  for (const auto& line : text::split_lines(think)) {
    if (text::trim(line).empty()) {
      in_paragraph = false;
    } else if (!in_paragraph) {
      in_paragraph = true;
      ++turns;
    }
  }
  return turns;
}

BudgetStats thinking_budget(const JudgeRecord& record, const TokenCounter& counter) {
  BudgetStats b;
  if (!record.think || text::trim(*record.think).empty()) return b;
  const std::string& think = *record.think;
  b.turns = count_turns(think);
  b.chars = static_cast<std::int64_t>(text::utf8_length(think));
  if (record.usage && record.usage->reasoning_tokens && *record.usage->reasoning_tokens > 0) {
    b.tokens = *record.usage->reasoning_tokens;
    b.source = TokenSource::ReportedReasoning;
  } else if (record.usage && record.usage->completion_tokens && *record.usage->completion_tokens > 0) {
    b.tokens = *record.usage->completion_tokens;
    b.source = TokenSource::ReportedCompletion;
  } else {
    b.tokens = std::max<std::int64_t>(counter(think), 1);
    b.source = TokenSource::Proxy;
  }
  return b;
}

bool DifficultyBin::contains(double v) const {
  if (lower && (lower_closed ? v < *lower : v <= *lower)) return false;
  if (upper && (upper_closed ? v > *upper : v >= *upper)) return false;
  return true;
}

std::vector<DifficultyBin> default_difficulty_bins() { return parse_difficulty_bins("0,-1,-5,-25"); }

std::vector<DifficultyBin> parse_difficulty_bins(std::string_view edges) {
  std::vector<double> e;
  for (const auto& part : text::split(edges, ',')) {
    const std::string t(text::trim(part));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (t.empty() || used != t.size() || !std::isfinite(v))
      throw UsageError("bin edge '" + t + "' is not a number");
    e.push_back(v);
  }
  if (e.empty() || e.front() != 0.0) throw UsageError("bin edges must start at 0");
  for (std::size_t i = 1; i < e.size(); ++i)
    if (!(e[i] < e[i - 1])) throw UsageError("bin edges must be strictly decreasing");

  std::vector<DifficultyBin> bins;
  bins.push_back({"0", 0.0, true, 0.0, true});
  for (std::size_t i = 1; i < e.size(); ++i)
    bins.push_back({"[" + edge_label(e[i]) + "," + edge_label(e[i - 1]) + ")", e[i], true, e[i - 1], false});
  bins.push_back({"<" + edge_label(e.back()), std::nullopt, false, e.back(), false});
  return bins;
}

std::optional<std::size_t> find_bin(std::span<const DifficultyBin> bins, double v) {
  for (std::size_t i = 0; i < bins.size(); ++i)
    if (bins[i].contains(v)) return i;
  return std::nullopt;
}

std::string_view to_string(AlignmentTag t) { return t == AlignmentTag::Aligned ? "aligned" : "misaligned"; }

AlignmentTag alignment_tag(double model_score, double human_score, double tau) {
  if (!(tau > 0.0)) throw UsageError("alignment tolerance must be positive");
  return std::abs(model_score - human_score) <= tau ? AlignmentTag::Aligned : AlignmentTag::Misaligned;
}

double quantile_type7(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw PreconditionError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BoxSummary box_summary(std::vector<double> values) {
  if (values.empty()) throw PreconditionError("box summary of an empty sample");
  std::sort(values.begin(), values.end());
  BoxSummary b;
  b.q1 = quantile_type7(values, 0.25);
  b.median = quantile_type7(values, 0.5);
  b.q3 = quantile_type7(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      ++b.outliers;
      continue;
    }
    b.whisker_low = std::min(b.whisker_low, v);
    b.whisker_high = std::max(b.whisker_high, v);
  }
  return b;
}

std::vector<BudgetCell> budget_by_difficulty(std::span<const BudgetObservation> observations,
                                             std::span<const DifficultyBin> bins, double tau) {
  if (bins.empty()) throw UsageError("at least one difficulty bin is required");
  std::vector<std::vector<double>> samples(bins.size() * 2);
  for (const auto& o : observations) {
    const auto bin = find_bin(bins, o.human_score);
    if (!bin)
      throw PreconditionError("human score " + text::format_number(o.human_score) + " falls outside every bin");
    const auto tag = alignment_tag(o.model_score, o.human_score, tau);
    samples[*bin * 2 + static_cast<std::size_t>(tag)].push_back(o.tokens);
  }

  std::vector<BudgetCell> cells;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    for (AlignmentTag tag : {AlignmentTag::Aligned, AlignmentTag::Misaligned}) {
      auto& s = samples[b * 2 + static_cast<std::size_t>(tag)];
      BudgetCell c;
      c.bin = bins[b].label;
      c.tag = tag;
      c.count = static_cast<std::int64_t>(s.size());
      if (!s.empty()) c.summary = box_summary(std::move(s));
      cells.push_back(std::move(c));
    }
  }
  return cells;
}

Histogram score_histogram(std::span<const double> values, std::span<const DifficultyBin> bins) {
  Histogram h;
  for (const auto& b : bins) h.labels.push_back(b.label);
  h.counts.assign(bins.size(), 0);
  std::int64_t zeros = 0;
  for (double v : values) {
    if (v == 0.0) ++zeros;
    if (const auto b = find_bin(bins, v)) ++h.counts[*b];
    else ++h.unbinned;
  }
  h.n = static_cast<std::int64_t>(values.size());
  for (auto c : h.counts)
    h.fractions.push_back(h.n == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(h.n));
  h.zero_rate = h.n == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(h.n);
  return h;
}

DistributionReport distribution_report(const ScoreMatrix& metric, const ScoreMatrix& human,
                                       std::span<const DifficultyBin> bins) {
  const ScoreMatrix pair[] = {metric, human};
  const auto aligned = align(pair);
  std::vector<double> m;
  std::vector<double> h;
  for (std::size_t s = 0; s < aligned[0].num_systems(); ++s) {
    for (std::size_t i = 0; i < aligned[0].num_items(); ++i) {
      const auto a = aligned[0].at(s, i);
      const auto b = aligned[1].at(s, i);
      if (!a || !b) continue;
      m.push_back(*a);
      h.push_back(*b);
    }
  }
  if (m.empty()) throw PreconditionError("metric and human matrices share no scored cells");

  DistributionReport r;
  r.metric = score_histogram(m, bins);
  r.human = score_histogram(h, bins);
  r.overestimation_index = r.human.zero_rate - r.metric.zero_rate;
  return r;
}

namespace {

std::map<SegmentKey, const ErrorAnnotation*> first_per_key(std::span<const ErrorAnnotation> annotations) {
  std::map<SegmentKey, const ErrorAnnotation*> out;
  for (const auto& a : annotations) {
    auto [it, inserted] = out.emplace(a.key, &a);
    if (!inserted && a.rater < it->second->rater) it->second = &a;
  }
  return out;
}

}  // namespace

DiscrepancyReport discrepancy_typology(std::span<const ErrorAnnotation> judge,
                                       std::span<const ErrorAnnotation> human) {
  using Cell = std::pair<Severity, Category>;
  const auto j = first_per_key(judge);
  const auto h = first_per_key(human);

  std::map<Cell, std::pair<std::int64_t, std::int64_t>> tally;
  DiscrepancyReport r;
  for (const auto& [key, ja] : j) {
    const auto hit = h.find(key);
    if (hit == h.end()) continue;
    ++r.segments;
    std::map<Cell, std::int64_t> balance;  // judge count minus human count
    for (const auto& s : ja->spans) ++balance[{s.severity, s.category}];
    for (const auto& s : hit->second->spans) --balance[{s.severity, s.category}];
    for (const auto& [cell, diff] : balance) {
      if (diff > 0) tally[cell].first += diff;
      if (diff < 0) tally[cell].second -= diff;
    }
  }
  for (const auto& [cell, counts] : tally) {
    if (counts.first == 0 && counts.second == 0) continue;
    r.counts.push_back({cell.first, cell.second, counts.first, counts.second});
    r.judge_only += counts.first;
    r.human_only += counts.second;
  }
  return r;
}

}  // namespace mqmkit
