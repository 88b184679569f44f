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

#include "mqmkit/trajectory_factory.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "mqmkit/error.hpp"
#include "mqmkit/hashing.hpp"
#include "mqmkit/io.hpp"
#include "mqmkit/judge_parser.hpp"
#include "mqmkit/prompt_kit.hpp"
#include "mqmkit/text.hpp"

namespace mqmkit {

namespace {

constexpr std::string_view kCalculationMarker = "Finally, I can calculate the final score:";

std::string severity_title(Severity s) {
  switch (s) {
    case Severity::Critical: return "Critical";
    case Severity::Major: return "Major";
    case Severity::Minor: return "Minor";
  }
  return "Minor";
}

std::string block_lines(std::span<const ErrorSpan> spans, Severity sev) {
  std::vector<std::string> lines;
  for (const auto& s : spans)
    if (s.severity == sev) lines.push_back(format_span_line(s));
  if (lines.empty()) return "no-error";
  return text::join(lines, "\n");
}

std::vector<ErrorSpan> in_block_order(std::span<const ErrorSpan> spans) {
  std::vector<ErrorSpan> out(spans.begin(), spans.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const ErrorSpan& a, const ErrorSpan& b) { return a.severity < b.severity; });
  return out;
}

const TextTemplate& thinmqm_template(std::string_view id) {
  static const TextTemplate kSrc = default_template("thinmqm-src");
  static const TextTemplate kRef = default_template("thinmqm-ref");
  static const TextTemplate kTarget = default_template("thinmqm-target");
  if (id == "thinmqm-src") return kSrc;
  if (id == "thinmqm-ref") return kRef;
  return kTarget;
}

}  // namespace

std::string narrate_score(std::span<const ErrorSpan> spans, const WeightScheme& weights) {
  const auto ordered = in_block_order(spans);
  const MqmScore score = score_spans(ordered, weights);
  if (ordered.empty()) return "No errors found: " + text::format_number(score.value);

  std::vector<std::string> lines;
  std::vector<std::string> terms;
  for (const auto& s : ordered) {
    const std::string penalty = text::format_number(weights.weight_for(s));
    lines.push_back(severity_title(s.severity) + " (" + s.category.path() + "): " + penalty);
    terms.push_back("(" + penalty + ")");
  }
  const double uncapped = static_cast<double>(score.micro_points) / 1e6;
  lines.push_back(text::join(terms, " + ") + " = " + text::format_number(uncapped));
  if (score.micro_points != to_micro_points(score.value))
    lines.push_back("Capped at " + text::format_number(*weights.cap) + ": " + text::format_number(score.value));
  return text::join(lines, "\n");
}

TrainingInstance synthesize_trajectory(const Segment& segment, const ErrorAnnotation& annotation,
                                       const WeightScheme& weights, MaterialsMode mode) {
  if (mode == MaterialsMode::Joint)
    throw PreconditionError("training trajectories are built for src or ref mode only");
  require_materials(segment, mode);

  const LanguageNames names = language_names(segment.key.lang_pair);
  std::map<std::string, std::string> pv = {
      {"source_lang", names.source},
      {"target_lang", names.target},
      {"translation", segment.hypothesis},
      {"critical_weight", text::format_number(weights.critical)},
      {"major_weight", text::format_number(weights.major)},
      {"minor_weight", text::format_number(weights.minor)},
      {"minor_fluency_punct_weight", text::format_number(weights.minor_fluency_punct)},
  };
  if (mode == MaterialsMode::Src) pv["source"] = segment.source;
  else pv["reference"] = *segment.reference;

  const MqmScore score = score_annotation(annotation, weights);
  const std::map<std::string, std::string> tv = {
      {"critical_esa", block_lines(annotation.spans, Severity::Critical)},
      {"major_esa", block_lines(annotation.spans, Severity::Major)},
      {"minor_esa", block_lines(annotation.spans, Severity::Minor)},
      {"score_calculation", narrate_score(annotation.spans, weights)},
      {"final_score", text::format_number(score.value)},
  };

  TrainingInstance t;
  t.prompt = thinmqm_template(mode == MaterialsMode::Src ? "thinmqm-src" : "thinmqm-ref").render(pv);
  t.target = thinmqm_template("thinmqm-target").render(tv);
  t.lang_pair = segment.key.lang_pair;
  t.provenance.key = annotation.key;
  t.provenance.rater = annotation.rater;
  t.provenance.mode = std::string(to_string(mode));
  return t;
}

bool SynthFilter::admits(const Segment& segment) const {
  if (drop_empty_source && text::trim(segment.source).empty()) return false;
  if (max_source_chars && text::utf8_length(segment.source) > *max_source_chars) return false;
  if (max_hypothesis_chars && text::utf8_length(segment.hypothesis) > *max_hypothesis_chars) return false;
  return true;
}

std::string SynthFilter::describe() const {
  std::vector<std::string> parts;
  parts.push_back(std::string("drop_empty_source=") + (drop_empty_source ? "true" : "false"));
  if (max_source_chars) parts.push_back("max_source_chars=" + std::to_string(*max_source_chars));
  if (max_hypothesis_chars) parts.push_back("max_hypothesis_chars=" + std::to_string(*max_hypothesis_chars));
  return text::join(parts, ";");
}

SynthResult synthesize_dataset(std::span<const Segment> segments, std::span<const ErrorAnnotation> annotations,
                               const WeightScheme& weights, MaterialsMode mode, const SynthFilter& filter) {
  if (mode == MaterialsMode::Joint)
    throw PreconditionError("training trajectories are built for src or ref mode only");
  std::map<SegmentKey, const Segment*> by_key;
  for (const auto& s : segments) by_key.emplace(s.key, &s);

  std::vector<const ErrorAnnotation*> order;
  for (const auto& a : annotations) order.push_back(&a);
  std::stable_sort(order.begin(), order.end(), [](const ErrorAnnotation* a, const ErrorAnnotation* b) {
    return std::tie(a->key, a->rater) < std::tie(b->key, b->rater);
  });

  SynthResult r;
  const std::string filters = filter.describe();
  for (const ErrorAnnotation* a : order) {
    const auto it = by_key.find(a->key);
    if (it == by_key.end()) {
      ++r.missing_segment;
      continue;
    }
    const Segment& seg = *it->second;
    if (!filter.admits(seg) || (mode == MaterialsMode::Ref && !seg.reference)) {
      ++r.filtered;
      continue;
    }
    TrainingInstance t = synthesize_trajectory(seg, *a, weights, mode);
    t.provenance.filters = filters;
    r.instances.push_back(std::move(t));
  }
  return r;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k >= n) return idx;
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

BalancedDataset balance_dataset(std::span<const TrainingInstance> instances, std::optional<std::int64_t> target_n,
                                std::uint64_t seed) {
  if (target_n && *target_n <= 0) throw UsageError("balance target must be positive");
  std::map<std::string, std::vector<const TrainingInstance*>> groups;
  for (const auto& t : instances) groups[t.lang_pair].push_back(&t);
  if (groups.empty()) throw PreconditionError("balance_dataset needs at least one group");

  BalancedDataset out;
  if (target_n) {
    out.target_n = *target_n;
  } else {
    out.target_n = std::numeric_limits<std::int64_t>::max();
    for (const auto& [lp, g] : groups) out.target_n = std::min<std::int64_t>(out.target_n, g.size());
  }

  for (const auto& [lp, g] : groups) {
    const auto n = static_cast<std::int64_t>(g.size());
    if (n < out.target_n)
      out.warnings.push_back("group " + lp + " has " + std::to_string(n) + " instances, fewer than the target " +
                             std::to_string(out.target_n) + "; kept whole");
    const auto keep = subsample_indices(g.size(), static_cast<std::size_t>(std::min(n, out.target_n)),
                                        hash_combine(seed, fnv1a64(lp)));
    for (std::size_t i : keep) out.instances.push_back(*g[i]);
    out.groups.push_back({lp, n, static_cast<std::int64_t>(keep.size())});
  }
  return out;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Conformance: return "conformance";
    case ViolationKind::ScoreConsistency: return "score_consistency";
    case ViolationKind::BlockOrder: return "block_order";
  }
  return "conformance";
}

std::vector<Violation> validate_instance(const TrainingInstance& instance, const WeightScheme& weights) {
  std::vector<Violation> v;
  const auto add = [&](ViolationKind k, std::string msg) { v.push_back({k, std::move(msg)}); };

  if (text::trim(instance.prompt).empty()) add(ViolationKind::Conformance, "empty prompt");

  const ThinkSplit split = split_think_answer(instance.target);
  if (!split.think || split.truncated) {
    add(ViolationKind::Conformance, "target lacks a closed think block");
    return v;
  }
  const std::string answer(text::trim(split.answer));
  if (!answer.starts_with("Score:") || answer.find('\n') != std::string::npos)
    add(ViolationKind::Conformance, "answer is not a single 'Score:' line");

  std::optional<double> stated;
  try {
    stated = parse_direct_score(answer, ScoreScale::Mqm);
  } catch (const ParseError& e) {
    add(ViolationKind::Conformance, std::string("final score unreadable: ") + e.what());
  }

  const std::string& think = *split.think;
  const auto marker = think.find(kCalculationMarker);
  if (marker == std::string::npos) add(ViolationKind::Conformance, "score calculation section missing");

  std::optional<ParsedJudgment> parsed;
  try {
    parsed = parse_error_spans(think, Strictness::Strict);
  } catch (const ParseError& e) {
    add(ViolationKind::Conformance, std::string("error blocks unreadable: ") + e.what());
  }
  if (!parsed) return v;

  for (Severity s : {Severity::Critical, Severity::Major, Severity::Minor}) {
    if (std::find(parsed->block_order.begin(), parsed->block_order.end(), s) == parsed->block_order.end())
      add(ViolationKind::Conformance, severity_title(s) + " block missing");
  }
  const std::vector<Severity> expected = {Severity::Critical, Severity::Major, Severity::Minor};
  if (parsed->block_order.size() == expected.size() && parsed->block_order != expected)
    add(ViolationKind::BlockOrder, "blocks are not in Critical, Major, Minor order");

  const auto& spans = parsed->annotation.spans;
  const double expected_score = score_spans(spans, weights).value;
  if (stated && *stated != expected_score)
    add(ViolationKind::ScoreConsistency, "stated score " + text::format_number(*stated) + " but spans score " +
                                             text::format_number(expected_score));
  if (marker != std::string::npos) {
    const std::string calc(text::trim(std::string_view(think).substr(marker + kCalculationMarker.size())));
    if (calc != narrate_score(spans, weights))
      add(ViolationKind::ScoreConsistency, "score calculation does not match the annotated spans");
  }
  return v;
}

namespace {

json to_json(const TrainingInstance& t) {
  json prov = {{"seg", mqmkit::to_json(t.provenance.key)},
               {"mode", t.provenance.mode},
               {"filters", t.provenance.filters}};
  prov["rater"] = t.provenance.rater ? json(*t.provenance.rater) : json(nullptr);
  return {{"prompt", t.prompt}, {"target", t.target}, {"lang_pair", t.lang_pair}, {"provenance", prov}};
}

TrainingInstance instance_from_json(const json& j) {
  TrainingInstance t;
  t.prompt = j.at("prompt").get<std::string>();
  t.target = j.at("target").get<std::string>();
  t.lang_pair = j.at("lang_pair").get<std::string>();
  if (j.contains("provenance")) {
    const json& p = j.at("provenance");
    if (p.contains("seg")) t.provenance.key = segment_key_from_json(p.at("seg"));
    if (p.contains("rater") && p.at("rater").is_string()) t.provenance.rater = p.at("rater").get<std::string>();
    t.provenance.mode = p.value("mode", "");
    t.provenance.filters = p.value("filters", "");
  }
  return t;
}

}  // namespace

void write_dataset_jsonl(const std::filesystem::path& path, std::span<const TrainingInstance> instances) {
  std::vector<json> rows;
  rows.reserve(instances.size());
  for (const auto& t : instances) rows.push_back(to_json(t));
  write_jsonl_file(path, rows);
}

std::vector<TrainingInstance> read_dataset_jsonl(const std::filesystem::path& path) {
  std::vector<TrainingInstance> out;
  std::size_t line = 0;
  for (const auto& j : read_jsonl_file(path)) {
    ++line;
    try {
      out.push_back(instance_from_json(j));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mqmkit
