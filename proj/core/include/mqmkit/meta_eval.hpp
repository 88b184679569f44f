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

// Meta-evaluation of metric scores against human scores: soft pairwise
// accuracy at system level, tie-calibrated pairwise accuracy at segment
// level, system-level correlations, and permutation significance tests.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mqmkit/data_model.hpp"
#include "mqmkit/error.hpp"

namespace mqmkit {

class UndefinedStatistic : public DataError {
 public:
  using DataError::DataError;
};

struct TestConfig {
  int resamples = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // results do not depend on this

  void validate() const;
};

struct KeyedScores {
  std::vector<ItemKey> items;
  std::vector<double> values;
};

// One-sided paired sign-flip permutation test that `a` scores higher than
// `b` on average: p = (1 + #{k : mean(flip_k(a - b)) >= mean(a - b)}) / (R + 1).
// Flip bits for resample k come from resample_bit(seed, i, j, k, t).
double sign_flip_p_value(std::span<const double> a, std::span<const double> b, int resamples,
                         std::uint64_t seed, std::uint64_t i, std::uint64_t j);

// Throws DataError unless `a` and `b` cover identical item keys in the same
// order.
double pairwise_p_value(const KeyedScores& a, const KeyedScores& b, const TestConfig& cfg,
                        std::uint64_t i = 0, std::uint64_t j = 1);

struct PairwisePValueMatrix {
  std::vector<std::string> systems;
  // Row-major N x N; only i < j entries are meaningful, and those are empty
  // when the two systems share no scored item.
  std::vector<std::optional<double>> p;

  std::size_t size() const { return systems.size(); }
  std::optional<double> at(std::size_t i, std::size_t j) const { return p[i * systems.size() + j]; }
};

// p-value that system i beats system j for every i < j, using the items both
// systems have scores for.
PairwisePValueMatrix pairwise_p_values(const ScoreMatrix& m, const TestConfig& cfg);

// Mean of 1 - |p^h_ij - p^m_ij| over pairs defined in both matrices.
double soft_pairwise_accuracy(const PairwisePValueMatrix& human, const PairwisePValueMatrix& metric);
// Aligns the two matrices first. Throws PreconditionError for fewer than two
// common systems.
double soft_pairwise_accuracy(const ScoreMatrix& human, const ScoreMatrix& metric, const TestConfig& cfg);

// Two translations of the same source item, scored by humans and the metric.
struct ItemPair {
  double human_a = 0.0;
  double human_b = 0.0;
  double metric_a = 0.0;
  double metric_b = 0.0;
};

// All system pairs per item with scores in both (aligned) matrices.
std::vector<ItemPair> item_pairs(const ScoreMatrix& human, const ScoreMatrix& metric);

struct TieCalibration {
  double accuracy = 0.0;
  double epsilon = 0.0;
  std::size_t n_pairs = 0;
};

// Fraction of pairs where the metric's better/worse/tie call matches the
// human one, the metric calling a tie when |m_a - m_b| <= epsilon and humans
// only on exact equality.
double pairwise_accuracy_at(std::span<const ItemPair> pairs, double epsilon);
// Maximizes pairwise_accuracy_at over {0} and all observed metric
// differences; ties go to the smaller epsilon. Throws PreconditionError on
// zero pairs.
TieCalibration tie_calibrated_accuracy(std::span<const ItemPair> pairs);

struct RankCorrelation {
  double pearson = 0.0;
  double kendall = 0.0;
};

double pearson_correlation(std::span<const double> x, std::span<const double> y);
// Tie-adjusted tau-b via Knight's O(n log n) algorithm.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);
// Throws UndefinedStatistic when either vector has zero variance.
RankCorrelation rank_correlations(std::span<const double> human_sys, std::span<const double> metric_sys);

// Mean of each system's present cells (summed in item order); NaN when none.
std::vector<double> system_means(const ScoreMatrix& m);

enum class MetaMetric { Spa, AccEq, Pearson, Kendall };

std::string_view to_string(MetaMetric m);
MetaMetric parse_meta_metric(std::string_view text);
// "system" for Spa/Pearson/Kendall, "segment" for AccEq.
std::string_view level_of(MetaMetric m);

// Value of one meta-metric on aligned matrices. `inner` drives the SPA
// p-values.
double meta_metric_value(MetaMetric meta, const ScoreMatrix& human, const ScoreMatrix& metric,
                         const TestConfig& inner);

struct SignificanceConfig {
  TestConfig test;
  // Resamples for the SPA p-values recomputed inside every outer resample.
  int spa_inner_resamples = 100;
};

struct SignificanceResult {
  double metric_a = 0.0;
  double metric_b = 0.0;
  double delta = 0.0;        // metric_a - metric_b
  double p_two_sided = 1.0;  // #{|d_k| >= |delta|}
  double p_a_better = 1.0;   // #{d_k >= delta}
  double p_b_better = 1.0;   // #{d_k <= delta}
  int resamples = 0;
};

// Paired permutation test between two metrics: each resample swaps the two
// metrics' scores on every item independently with probability 1/2.
SignificanceResult metric_significance(const ScoreMatrix& metric_a, const ScoreMatrix& metric_b,
                                       const ScoreMatrix& human, MetaMetric meta,
                                       const SignificanceConfig& cfg);

enum class Outcome { Win, Tie, Loss };
std::string_view to_string(Outcome o);

struct ComparisonSetting {
  std::string language;
  MetaMetric meta = MetaMetric::AccEq;
  ScoreMatrix human;
  ScoreMatrix metric_a;
  ScoreMatrix metric_b;
};

struct SettingOutcome {
  std::string language;
  std::string level;
  MetaMetric meta = MetaMetric::AccEq;
  Outcome outcome = Outcome::Tie;
  SignificanceResult result;
};

struct WinTieLoss {
  int wins = 0;
  int ties = 0;
  int losses = 0;
  std::vector<SettingOutcome> settings;
};

// Win when metric_a is better with one-sided p < alpha, loss when worse with
// p < alpha, tie otherwise. Each setting uses its own derived seed.
WinTieLoss win_tie_loss(std::span<const ComparisonSetting> settings, const SignificanceConfig& cfg,
                        double alpha = 0.05);

struct MetaScores {
  std::optional<double> spa;  // [0, 1]
  std::optional<double> acc_eq_star;
  std::optional<double> epsilon_star;
  std::optional<double> pearson;
  std::optional<double> kendall;
  std::size_t n_systems = 0;
  std::size_t n_items = 0;
  std::size_t n_pairs = 0;

  bool operator==(const MetaScores&) const = default;
};

struct MetaReport {
  std::string label;
  std::vector<std::pair<std::string, MetaScores>> per_language;
  // Unweighted means over languages.
  std::optional<double> spa;
  std::optional<double> acc_eq_star;
  std::optional<double> pearson;
  std::optional<double> kendall;
  // Unweighted mean of all per-language SPA and Acc*_eq values together.
  std::optional<double> avg_all;
  int resamples = 0;
  std::uint64_t seed = 0;

  bool operator==(const MetaReport&) const = default;
};

// Per-language meta-evaluation. SPA p-values for language L use the seed
// hash_combine(cfg.seed, fnv1a64(L)) for both human and metric.
MetaReport meta_evaluate(const ScoreMatrix& human, const ScoreMatrix& metric, const TestConfig& cfg,
                         std::string label = "metric");

}  // namespace mqmkit
