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
#include <string>
#include <string_view>
#include <vector>

#include "mqmkit/data_model.hpp"
#include "mqmkit/mqm_scorer.hpp"

namespace mqmkit {

struct Provenance {
  SegmentKey key;
  std::optional<std::string> rater;
  std::string mode;     // "src" or "ref"
  std::string filters;  // filter settings that admitted the segment

  bool operator==(const Provenance&) const = default;
};

struct TrainingInstance {
  std::string prompt;
  std::string target;
  std::string lang_pair;
  Provenance provenance;

  bool operator==(const TrainingInstance&) const = default;
};

// Score calculation text: one "Severity (category): penalty" line per span in
// block order, then "(p1) + (p2) = total", or "No errors found: 0".
std::string narrate_score(std::span<const ErrorSpan> spans, const WeightScheme& weights);

// Joint mode is rejected with PreconditionError.
TrainingInstance synthesize_trajectory(const Segment& segment, const ErrorAnnotation& annotation,
                                       const WeightScheme& weights, MaterialsMode mode);

struct SynthFilter {
  bool drop_empty_source = true;
  std::optional<std::size_t> max_source_chars;
  std::optional<std::size_t> max_hypothesis_chars;

  bool admits(const Segment& segment) const;
  std::string describe() const;
};

struct SynthResult {
  std::vector<TrainingInstance> instances;  // ordered by (segment key, rater)
  std::int64_t filtered = 0;
  std::int64_t missing_segment = 0;
};

// One instance per (segment, rater) annotation.
SynthResult synthesize_dataset(std::span<const Segment> segments, std::span<const ErrorAnnotation> annotations,
                               const WeightScheme& weights, MaterialsMode mode, const SynthFilter& filter = {});

struct GroupSize {
  std::string lang_pair;
  std::int64_t before = 0;
  std::int64_t after = 0;

  bool operator==(const GroupSize&) const = default;
};

struct BalancedDataset {
  std::vector<TrainingInstance> instances;  // groups by lang_pair, input order within
  std::vector<GroupSize> groups;
  std::int64_t target_n = 0;
  std::vector<std::string> warnings;
};

// Subsamples every lang_pair group without replacement to target_n (default:
// the smallest group). Groups smaller than target_n are kept whole.
BalancedDataset balance_dataset(std::span<const TrainingInstance> instances, std::optional<std::int64_t> target_n,
                                std::uint64_t seed);

// Chosen positions within a group of size n, ascending.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

enum class ViolationKind { Conformance, ScoreConsistency, BlockOrder };
std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind = ViolationKind::Conformance;
  std::string message;

  bool operator==(const Violation&) const = default;
};

// Empty when the instance is well formed.
std::vector<Violation> validate_instance(const TrainingInstance& instance, const WeightScheme& weights);

void write_dataset_jsonl(const std::filesystem::path& path, std::span<const TrainingInstance> instances);
std::vector<TrainingInstance> read_dataset_jsonl(const std::filesystem::path& path);

}  // namespace mqmkit
