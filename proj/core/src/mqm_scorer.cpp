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

#include "mqmkit/mqm_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mqmkit/error.hpp"
#include "mqmkit/io.hpp"

namespace mqmkit {

namespace {
constexpr double kMicro = 1e6;
}

std::int64_t to_micro_points(double points) { return std::llround(points * kMicro); }

void WeightScheme::validate() const {
  const double w[] = {critical, major, minor, minor_fluency_punct};
  for (double v : w)
    if (!std::isfinite(v) || v > 0.0) throw UsageError("severity weights must be finite and <= 0");
  if (!(std::abs(critical) >= std::abs(major) && std::abs(major) >= std::abs(minor) &&
        std::abs(minor) >= std::abs(minor_fluency_punct)))
    throw UsageError("severity weights must keep |critical| >= |major| >= |minor| >= |minor_fluency_punct|");
  if (cap && (!std::isfinite(*cap) || *cap > 0.0)) throw UsageError("score cap must be finite and <= 0");
}

double WeightScheme::weight_for(const ErrorSpan& span) const {
  switch (span.severity) {
    case Severity::Critical: return critical;
    case Severity::Major: return major;
    case Severity::Minor: return is_fluency_punctuation(span.category) ? minor_fluency_punct : minor;
  }
  return minor;
}

WeightScheme WeightScheme::scaled(double k) const {
  WeightScheme w = *this;
  w.critical *= k;
  w.major *= k;
  w.minor *= k;
  w.minor_fluency_punct *= k;
  if (w.cap) *w.cap *= k;
  return w;
}

WeightScheme load_weight_scheme(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError("weight scheme '" + path.string() + "' is not valid JSON: " + e.what());
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  if (!j.is_object()) throw UsageError("weight scheme must be a JSON object");
  WeightScheme w;
  const auto field = [&](const char* name, double& dst) {
    if (!j.contains(name)) throw UsageError(std::string("weight scheme lacks '") + name + "'");
    if (!j.at(name).is_number()) throw UsageError(std::string("weight '") + name + "' must be a number");
    dst = j.at(name).get<double>();
  };
  field("critical", w.critical);
  field("major", w.major);
  field("minor", w.minor);
  field("minor_fluency_punct", w.minor_fluency_punct);
  if (j.contains("cap") && !j.at("cap").is_null()) {
    if (!j.at("cap").is_number()) throw UsageError("weight 'cap' must be a number");
    w.cap = j.at("cap").get<double>();
  }
  w.validate();
  return w;
}

WeightScheme resolve_weight_scheme(std::string_view spec) {
  if (spec == "default" || spec == "standard") return WeightScheme::standard();
  if (spec == "alt321") return WeightScheme::alt321();
  return load_weight_scheme(std::filesystem::path(std::string(spec)));
}

MqmScore MqmScore::operator+(const MqmScore& other) const {
  MqmScore s;
  s.n_critical = n_critical + other.n_critical;
  s.n_major = n_major + other.n_major;
  s.n_minor = n_minor + other.n_minor;
  s.n_minor_fluency_punct = n_minor_fluency_punct + other.n_minor_fluency_punct;
  s.micro_points = micro_points + other.micro_points;
  s.value = static_cast<double>(s.micro_points) / kMicro;
  return s;
}

MqmScore score_spans(std::span<const ErrorSpan> spans, const WeightScheme& weights) {
  MqmScore s;
  for (const auto& span : spans) {
    switch (span.severity) {
      case Severity::Critical: ++s.n_critical; break;
      case Severity::Major: ++s.n_major; break;
      case Severity::Minor:
        ++s.n_minor;
        if (is_fluency_punctuation(span.category)) ++s.n_minor_fluency_punct;
        break;
    }
  }
  s.micro_points = s.n_critical * to_micro_points(weights.critical) + s.n_major * to_micro_points(weights.major) +
                   (s.n_minor - s.n_minor_fluency_punct) * to_micro_points(weights.minor) +
                   s.n_minor_fluency_punct * to_micro_points(weights.minor_fluency_punct);
  std::int64_t total = s.micro_points;
  if (weights.cap) total = std::max(total, to_micro_points(*weights.cap));
  s.value = static_cast<double>(total) / kMicro;
  return s;
}

MqmScore score_annotation(const ErrorAnnotation& annotation, const WeightScheme& weights) {
  return score_spans(annotation.spans, weights);
}

double aggregate_rater_scores(std::span<const MqmScore> per_rater) {
  if (per_rater.empty()) throw PreconditionError("cannot aggregate an empty list of rater scores");
  double sum = 0.0;
  for (const auto& s : per_rater) sum += s.value;
  return sum / static_cast<double>(per_rater.size());
}

ScoreMatrix rescore_matrix(std::span<const ErrorAnnotation> annotations, const WeightScheme& weights) {
  std::map<SegmentKey, std::vector<MqmScore>> by_segment;
  for (const auto& a : annotations) by_segment[a.key].push_back(score_annotation(a, weights));
  std::vector<ScoreEntry> entries;
  entries.reserve(by_segment.size());
  for (auto& [key, scores] : by_segment) {
    std::sort(scores.begin(), scores.end(), [](const MqmScore& x, const MqmScore& y) { return x.value < y.value; });
    entries.push_back({key, aggregate_rater_scores(scores)});
  }
  return build_score_matrix(entries);
}

}  // namespace mqmkit
