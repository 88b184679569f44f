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
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>

#include "mqmkit/data_model.hpp"

namespace mqmkit {

// Severity -> penalty mapping. Penalties are non-positive; totals are
// accumulated exactly in integer micro-points, so weights are used at a
// resolution of 1e-6.
struct WeightScheme {
  double critical = -25.0;
  double major = -5.0;
  double minor = -1.0;
  double minor_fluency_punct = -0.1;
  std::optional<double> cap;  // most negative total allowed

  static WeightScheme standard() { return {}; }
  // The -3/-2/-1 robustness scheme; the punctuation discount is kept.
  static WeightScheme alt321() { return {-3.0, -2.0, -1.0, -0.1, std::nullopt}; }

  // Throws UsageError unless all weights are <= 0 and
  // |critical| >= |major| >= |minor| >= |minor_fluency_punct|.
  void validate() const;
  double weight_for(const ErrorSpan& span) const;
  WeightScheme scaled(double k) const;

  bool operator==(const WeightScheme&) const = default;
};

// JSON object with critical, major, minor, minor_fluency_punct and optional cap.
WeightScheme load_weight_scheme(const std::filesystem::path& path);
// "default", "alt321", or a path to a JSON file.
WeightScheme resolve_weight_scheme(std::string_view spec);

std::int64_t to_micro_points(double points);

struct MqmScore {
  double value = 0.0;
  std::int64_t n_critical = 0;
  std::int64_t n_major = 0;
  std::int64_t n_minor = 0;  // includes minor fluency/punctuation
  std::int64_t n_minor_fluency_punct = 0;
  std::int64_t micro_points = 0;  // exact uncapped total

  // Sum of two scores of disjoint span sets (cap not applied).
  MqmScore operator+(const MqmScore& other) const;
  bool operator==(const MqmScore&) const = default;
};

MqmScore score_annotation(const ErrorAnnotation& annotation, const WeightScheme& weights);
MqmScore score_spans(std::span<const ErrorSpan> spans, const WeightScheme& weights);

// Mean of the per-rater values; throws PreconditionError on an empty list.
double aggregate_rater_scores(std::span<const MqmScore> per_rater);

// Scores every annotation and averages raters of the same segment.
ScoreMatrix rescore_matrix(std::span<const ErrorAnnotation> annotations, const WeightScheme& weights);

}  // namespace mqmkit
