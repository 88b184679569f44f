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

#include "mqmkit/io.hpp"

#include <fstream>
#include <sstream>

#include "mqmkit/error.hpp"
#include "mqmkit/judge_parser.hpp"
#include "mqmkit/text.hpp"

namespace mqmkit {

namespace {

const json& require(const json& j, const char* field) {
  if (!j.is_object() || !j.contains(field)) throw DataError(std::string("missing field '") + field + "'");
  return j.at(field);
}

std::string require_string(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_string()) throw DataError(std::string("field '") + field + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* field) {
  if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
  if (!j.at(field).is_string()) throw DataError(std::string("field '") + field + "' must be a string");
  return j.at(field).get<std::string>();
}

std::optional<std::int64_t> optional_int(const json& j, const char* field) {
  if (!j.is_object() || !j.contains(field) || j.at(field).is_null()) return std::nullopt;
  if (!j.at(field).is_number_integer()) throw DataError(std::string("field '") + field + "' must be an integer");
  return j.at(field).get<std::int64_t>();
}

// The key lives under "seg" or, for hand-written files, at the top level.
const json& key_holder(const json& j) {
  if (j.is_object() && j.contains("seg") && j.at("seg").is_object()) return j.at("seg");
  return j;
}

}  // namespace

json to_json(const SegmentKey& key) {
  return {{"lang_pair", key.lang_pair}, {"system", key.system_id}, {"doc", key.doc_id}, {"seg_id", key.seg_id}};
}

SegmentKey segment_key_from_json(const json& j) {
  SegmentKey k;
  k.lang_pair = require_string(j, "lang_pair");
  k.system_id = require_string(j, "system");
  k.doc_id = require_string(j, "doc");
  const json& id = require(j, "seg_id");
  if (!id.is_number_integer() || id.get<std::int64_t>() < 0)
    throw DataError("field 'seg_id' must be a non-negative integer");
  k.seg_id = id.get<std::int64_t>();
  return k;
}

json to_json(const Segment& s) {
  json j = {{"seg", to_json(s.key)}, {"source", s.source}, {"hypothesis", s.hypothesis}};
  if (s.reference) j["reference"] = *s.reference;
  return j;
}

Segment segment_from_json(const json& j) {
  Segment s;
  s.key = segment_key_from_json(key_holder(j));
  s.source = require_string(j, "source");
  s.reference = optional_string(j, "reference");
  s.hypothesis = require_string(j, "hypothesis");
  if (s.hypothesis.empty()) throw DataError("segment " + s.key.to_string() + " has an empty hypothesis");
  return s;
}

json to_json(const ErrorSpan& s) {
  return {{"severity", std::string(to_string(s.severity))}, {"category", s.category.path()}, {"span", s.span}};
}

ErrorSpan error_span_from_json(const json& j) {
  ErrorSpan s;
  const std::string sev = require_string(j, "severity");
  const auto parsed = parse_severity(sev);
  if (!parsed) throw DataError("unknown severity '" + sev + "'");
  s.severity = *parsed;
  s.category = Category::from_path(require_string(j, "category"));
  s.span = optional_string(j, "span").value_or("");
  return s;
}

json to_json(const ErrorAnnotation& a) {
  json spans = json::array();
  for (const auto& s : a.spans) spans.push_back(to_json(s));
  json j = {{"seg", to_json(a.key)}, {"spans", spans}};
  if (a.rater) j["rater"] = *a.rater;
  return j;
}

ErrorAnnotation annotation_from_json(const json& j) {
  ErrorAnnotation a;
  a.key = segment_key_from_json(key_holder(j));
  a.rater = optional_string(j, "rater");
  const json& spans = require(j, "spans");
  if (!spans.is_array()) throw DataError("field 'spans' must be an array");
  for (const auto& s : spans) a.spans.push_back(error_span_from_json(s));
  return a;
}

json to_json(const JudgeRecord& r) {
  json j = {{"seg", to_json(r.key)},
            {"fingerprint", r.fingerprint},
            {"completion", r.raw_completion},
            {"answer", r.answer},
            {"truncated", r.truncated},
            {"status", r.failed ? "failed" : "ok"}};
  if (r.think) j["think"] = *r.think;
  if (r.usage) {
    json u = json::object();
    if (r.usage->prompt_tokens) u["prompt_tokens"] = *r.usage->prompt_tokens;
    if (r.usage->completion_tokens) u["completion_tokens"] = *r.usage->completion_tokens;
    if (r.usage->reasoning_tokens) u["reasoning_tokens"] = *r.usage->reasoning_tokens;
    j["usage"] = u;
  }
  if (r.failed) j["error"] = r.error;
  if (!r.attempts.empty()) {
    json attempts = json::array();
    for (const auto& a : r.attempts)
      attempts.push_back({{"status", a.status}, {"error", a.error}, {"delay_before_ms", a.delay_before_ms}});
    j["attempts"] = attempts;
  }
  return j;
}

JudgeRecord judge_record_from_json(const json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  JudgeRecord r;
  r.key = segment_key_from_json(key_holder(j));
  r.raw_completion = require_string(j, "completion");
  r.fingerprint = optional_string(j, "fingerprint").value_or("");

  const auto split = split_think_answer(r.raw_completion);
  r.think = split.think;
  r.answer = split.answer;
  r.truncated = split.truncated;
  if (auto think = optional_string(j, "think")) r.think = think;
  if (auto answer = optional_string(j, "answer")) r.answer = *answer;
  if (j.contains("truncated") && j.at("truncated").is_boolean()) r.truncated = r.truncated || j.at("truncated").get<bool>();

  if (j.contains("usage") && j.at("usage").is_object()) {
    const json& u = j.at("usage");
    TokenUsage usage;
    usage.prompt_tokens = optional_int(u, "prompt_tokens");
    usage.completion_tokens = optional_int(u, "completion_tokens");
    usage.reasoning_tokens = optional_int(u, "reasoning_tokens");
    r.usage = usage;
  }
  if (auto status = optional_string(j, "status")) r.failed = *status == "failed";
  r.error = optional_string(j, "error").value_or("");
  if (j.contains("attempts") && j.at("attempts").is_array()) {
    for (const auto& a : j.at("attempts")) {
      AttemptInfo info;
      info.status = static_cast<int>(optional_int(a, "status").value_or(0));
      info.error = a.is_object() ? optional_string(a, "error").value_or("") : "";
      info.delay_before_ms = optional_int(a, "delay_before_ms").value_or(0);
      r.attempts.push_back(std::move(info));
    }
  }
  return r;
}

json to_json(const ScoreEntry& e) { return {{"seg", to_json(e.key)}, {"score", e.value}}; }

ScoreEntry score_entry_from_json(const json& j) {
  ScoreEntry e;
  e.key = segment_key_from_json(key_holder(j));
  const json& v = require(j, "score");
  if (!v.is_number()) throw DataError("field 'score' must be a number");
  e.value = v.get<double>();
  return e;
}

std::vector<json> read_jsonl(std::istream& in) {
  std::vector<json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
  }
  return rows;
}

std::vector<json> read_jsonl_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return read_jsonl(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_jsonl(std::ostream& out, const std::vector<json>& rows) {
  for (const auto& r : rows) out << r.dump() << '\n';
}

void write_jsonl_file(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::ostringstream out;
  write_jsonl(out, rows);
  write_text_file(path, out.str());
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mqmkit
