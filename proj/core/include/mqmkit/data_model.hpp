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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mqmkit {

// Which evaluation materials a judge sees next to the hypothesis.
enum class MaterialsMode { Src, Ref, Joint };

std::string_view to_string(MaterialsMode mode);
// Accepts "src", "ref", "joint" in any case.
MaterialsMode parse_materials_mode(std::string_view text);

constexpr bool shows_source(MaterialsMode m) { return m != MaterialsMode::Ref; }
constexpr bool shows_reference(MaterialsMode m) { return m != MaterialsMode::Src; }

struct SegmentKey {
  std::string lang_pair;
  std::string system_id;
  std::string doc_id;
  std::int64_t seg_id = 0;

  auto operator<=>(const SegmentKey&) const = default;
  std::string to_string() const;
};

// A source segment independent of the system that translated it; the column
// key of a ScoreMatrix.
struct ItemKey {
  std::string lang_pair;
  std::string doc_id;
  std::int64_t seg_id = 0;

  auto operator<=>(const ItemKey&) const = default;
  std::string to_string() const;
};

inline ItemKey item_key(const SegmentKey& k) { return {k.lang_pair, k.doc_id, k.seg_id}; }

struct Segment {
  SegmentKey key;
  std::string source;
  std::optional<std::string> reference;
  std::string hypothesis;

  bool operator==(const Segment&) const = default;
};

// Throws PreconditionError when `mode` needs a reference the segment lacks.
void require_materials(const Segment& segment, MaterialsMode mode);

enum class Severity { Critical, Major, Minor };

std::string_view to_string(Severity s);
// Case-insensitive match of "critical", "major", "minor".
std::optional<Severity> parse_severity(std::string_view text);

// Hierarchical error category, e.g. {"accuracy", "mistranslation"}. `sub` may
// itself contain '/' for deeper paths.
struct Category {
  std::string top;
  std::string sub;

  auto operator<=>(const Category&) const = default;
  std::string path() const;
  // Splits on the first '/'; no normalization.
  static Category from_path(std::string_view path);
};

// The closed top-level taxonomy used by the judge prompts.
std::span<const std::string_view> top_level_categories();
std::span<const std::string_view> known_subcategories(std::string_view top);

struct CategoryMatch {
  Category category;
  // Set when the raw label needed more than case/whitespace folding.
  std::optional<std::string> note;
  // False when the top level was unrecognized and mapped to "other".
  bool recognized = true;
};

// Normalizes a free-form category label onto the taxonomy. Known top levels
// are matched through aliases and small edit distance; known sub-categories
// are canonicalized, unknown ones are kept verbatim. Unknown top levels map
// to "other".
CategoryMatch normalize_category(std::string_view raw);

inline bool is_no_error(const Category& c) { return c.top == "no-error"; }
bool is_fluency_punctuation(const Category& c);

struct ErrorSpan {
  Severity severity = Severity::Minor;
  Category category;
  std::string span;

  auto operator<=>(const ErrorSpan&) const = default;
};

struct ErrorAnnotation {
  SegmentKey key;
  std::optional<std::string> rater;
  std::vector<ErrorSpan> spans;  // empty means no error

  bool operator==(const ErrorAnnotation&) const = default;
};

struct TokenUsage {
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
  std::optional<std::int64_t> reasoning_tokens;

  bool operator==(const TokenUsage&) const = default;
};

struct AttemptInfo {
  int status = 0;  // HTTP status, 0 for transport errors
  std::string error;
  std::int64_t delay_before_ms = 0;

  bool operator==(const AttemptInfo&) const = default;
};

// One judge completion. raw_completion holds the think block (with its
// delimiters) followed by the answer.
struct JudgeRecord {
  SegmentKey key;
  std::string fingerprint;
  std::string raw_completion;
  std::optional<std::string> think;
  std::string answer;
  std::optional<TokenUsage> usage;
  bool truncated = false;
  int run_index = 0;  // position among records sharing a segment key
  bool failed = false;
  std::string error;
  std::vector<AttemptInfo> attempts;

  bool operator==(const JudgeRecord&) const = default;
};

struct LoadIssue {
  std::size_t line = 0;
  std::string message;

  bool operator==(const LoadIssue&) const = default;
};

struct MqmTable {
  std::vector<Segment> segments;           // unique per segment key, sorted
  std::vector<ErrorAnnotation> annotations;  // one per (segment, rater), sorted
  std::vector<LoadIssue> issues;

  bool operator==(const MqmTable&) const = default;
};

struct MqmTsvOptions {
  // Used when the table has no "lp"/"lang_pair" column.
  std::string default_lang_pair = "xx-xx";
};

// Loads a WMT-style MQM table. Columns are located by header name; required:
// system, doc, seg_id, rater, source, target, category, severity. Optional:
// lp/lang_pair, reference/ref, span. When no span column exists, text between
// <v> and </v> markers in target is taken as the span and the markers are
// stripped from the hypothesis. Bad rows are reported in `issues` and skipped.
MqmTable load_mqm_tsv(const std::filesystem::path& path, const MqmTsvOptions& opts = {});
MqmTable read_mqm_tsv(std::istream& in, const MqmTsvOptions& opts = {});

struct JudgeLoad {
  std::vector<JudgeRecord> records;  // file order
  std::vector<LoadIssue> issues;     // rejected records
};

// One JSON object per line. Invalid JSON throws DataError naming the line;
// objects missing required fields are rejected into `issues`.
JudgeLoad load_judge_jsonl(const std::filesystem::path& path);
JudgeLoad read_judge_jsonl(std::istream& in);

struct ScoreEntry {
  SegmentKey key;
  double value = 0.0;
};

// Systems x items table of optional scores.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::vector<std::string> systems, std::vector<ItemKey> items);

  std::size_t num_systems() const { return systems_.size(); }
  std::size_t num_items() const { return items_.size(); }
  const std::vector<std::string>& systems() const { return systems_; }
  const std::vector<ItemKey>& items() const { return items_; }

  std::optional<double> at(std::size_t system, std::size_t item) const {
    const std::size_t i = system * items_.size() + item;
    if (!present_[i]) return std::nullopt;
    return values_[i];
  }
  void set(std::size_t system, std::size_t item, std::optional<double> value);

  std::optional<std::size_t> find_system(std::string_view id) const;
  std::optional<std::size_t> find_item(const ItemKey& key) const;
  std::size_t count_present() const;

  // Distinct language pairs of the items, sorted.
  std::vector<std::string> lang_pairs() const;
  // Items of one language pair; systems without any score there are dropped.
  ScoreMatrix select_lang_pair(std::string_view lang_pair) const;

  // Present cells in (system, item) order.
  std::vector<ScoreEntry> entries() const;

  template <class F>
  ScoreMatrix transformed(F&& f) const {
    ScoreMatrix out = *this;
    for (std::size_t i = 0; i < out.values_.size(); ++i)
      if (out.present_[i]) out.values_[i] = f(out.values_[i]);
    return out;
  }

  bool operator==(const ScoreMatrix&) const = default;

 private:
  std::vector<std::string> systems_;
  std::vector<ItemKey> items_;
  std::vector<double> values_;
  std::vector<unsigned char> present_;
};

// Systems sorted lexicographically, items by (lang_pair, doc_id, seg_id).
// Duplicate cells are averaged; duplicates are summed in sorted order so the
// result does not depend on input order.
ScoreMatrix build_score_matrix(std::span<const ScoreEntry> scores);

// Restricts all matrices to their common systems and items and keeps a cell
// only where every matrix has it.
std::vector<ScoreMatrix> align(std::span<const ScoreMatrix> matrices);

}  // namespace mqmkit
