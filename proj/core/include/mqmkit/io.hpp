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

// JSON shapes of the domain types and JSON Lines helpers. Every record that
// refers to a segment carries it as "seg": {lang_pair, system, doc, seg_id}.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mqmkit/data_model.hpp"

namespace mqmkit {

using json = nlohmann::json;

json to_json(const SegmentKey& key);
SegmentKey segment_key_from_json(const json& j);

json to_json(const Segment& s);
Segment segment_from_json(const json& j);

json to_json(const ErrorSpan& s);
ErrorSpan error_span_from_json(const json& j);

json to_json(const ErrorAnnotation& a);
ErrorAnnotation annotation_from_json(const json& j);

json to_json(const JudgeRecord& r);
// Requires a segment key and a "completion" string; think/answer are split
// from the completion unless given explicitly. Unknown fields are ignored.
JudgeRecord judge_record_from_json(const json& j);

json to_json(const ScoreEntry& e);
ScoreEntry score_entry_from_json(const json& j);

// Reads non-blank lines as JSON values; invalid JSON throws DataError with
// the line number.
std::vector<json> read_jsonl(std::istream& in);
std::vector<json> read_jsonl_file(const std::filesystem::path& path);
void write_jsonl(std::ostream& out, const std::vector<json>& rows);
void write_jsonl_file(const std::filesystem::path& path, const std::vector<json>& rows);

// Sorted keys, two-space indent, trailing newline.
std::string canonical_dump(const json& j);

// Throws DataError when the path cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mqmkit
