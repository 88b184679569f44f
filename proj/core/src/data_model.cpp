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

#include "mqmkit/data_model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "mqmkit/error.hpp"
#include "mqmkit/io.hpp"
#include "mqmkit/judge_parser.hpp"
#include "mqmkit/text.hpp"

namespace mqmkit {

std::string_view to_string(MaterialsMode mode) {
  switch (mode) {
    case MaterialsMode::Src: return "src";
    case MaterialsMode::Ref: return "ref";
    case MaterialsMode::Joint: return "joint";
  }
  return "src";
}

MaterialsMode parse_materials_mode(std::string_view text) {
  const std::string t = text::to_lower(text::trim(text));
  if (t == "src" || t == "source") return MaterialsMode::Src;
  if (t == "ref" || t == "reference") return MaterialsMode::Ref;
  if (t == "joint") return MaterialsMode::Joint;
  throw UsageError("unknown materials mode '" + std::string(text) + "' (expected src, ref or joint)");
}

std::string SegmentKey::to_string() const {
  return lang_pair + ":" + system_id + ":" + doc_id + ":" + std::to_string(seg_id);
}

std::string ItemKey::to_string() const {
  return lang_pair + ":" + doc_id + ":" + std::to_string(seg_id);
}

void require_materials(const Segment& segment, MaterialsMode mode) {
  if (segment.hypothesis.empty())
    throw PreconditionError("segment " + segment.key.to_string() + " has an empty hypothesis");
  if (shows_reference(mode) && !segment.reference)
    throw PreconditionError("segment " + segment.key.to_string() + " has no reference but mode '" +
                            std::string(to_string(mode)) + "' requires one");
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Critical: return "Critical";
    case Severity::Major: return "Major";
    case Severity::Minor: return "Minor";
  }
  return "Minor";
}

std::optional<Severity> parse_severity(std::string_view text) {
  const std::string t = text::to_lower(text::trim(text));
  if (t == "critical") return Severity::Critical;
  if (t == "major") return Severity::Major;
  if (t == "minor") return Severity::Minor;
  return std::nullopt;
}

std::string Category::path() const { return sub.empty() ? top : top + "/" + sub; }

Category Category::from_path(std::string_view path) {
  const auto slash = path.find('/');
  if (slash == std::string_view::npos) return {std::string(path), {}};
  return {std::string(path.substr(0, slash)), std::string(path.substr(slash + 1))};
}

namespace {

constexpr std::array<std::string_view, 7> kTopLevels = {
    "accuracy", "fluency", "style", "terminology", "non-translation", "other", "no-error"};

constexpr std::array<std::string_view, 4> kAccuracySubs = {"addition", "mistranslation", "omission",
                                                           "untranslated text"};
constexpr std::array<std::string_view, 6> kFluencySubs = {
    "character encoding", "grammar", "inconsistency", "punctuation", "register", "spelling"};
constexpr std::array<std::string_view, 1> kStyleSubs = {"awkward"};
constexpr std::array<std::string_view, 2> kTerminologySubs = {"inappropriate for context",
                                                              "inconsistent use"};

// Lowercase, '_' and '-' between words as spaces, collapsed whitespace, no
// trailing punctuation.
std::string fold_label(std::string_view raw) {
  std::string s = text::to_lower(text::trim(raw));
  while (!s.empty() && (s.back() == '!' || s.back() == ':' || s.back() == '.')) s.pop_back();
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == '_' || c == ' ' || c == '\t') {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

std::optional<std::string_view> match_top_level(const std::string& folded, bool& fuzzy) {
  fuzzy = false;
  for (auto t : kTopLevels)
    if (folded == t) return t;

  static const std::map<std::string, std::string_view, std::less<>> kAliases = {
      {"non translation", "non-translation"},
      {"nontranslation", "non-translation"},
      {"no error", "no-error"},
      {"noerror", "no-error"},
      {"none", "no-error"},
      {"terminologies", "terminology"},
      {"stylistic", "style"},
  };
  if (auto it = kAliases.find(folded); it != kAliases.end()) {
    fuzzy = true;
    return it->second;
  }

  // Small typos ("acuracy", "fluncy"). Only for labels long enough that a
  // two-edit distance is not ambiguous.
  std::optional<std::string_view> best;
  std::size_t best_d = 3;
  bool tie = false;
  for (auto t : kTopLevels) {
    if (t.size() < 5) continue;
    const std::size_t d = text::edit_distance(folded, t);
    if (d < best_d) {
      best_d = d;
      best = t;
      tie = false;
    } else if (d == best_d) {
      tie = true;
    }
  }
  if (best && !tie && best_d <= 2) {
    fuzzy = true;
    return best;
  }
  return std::nullopt;
}

}  // namespace

std::span<const std::string_view> top_level_categories() { return kTopLevels; }

std::span<const std::string_view> known_subcategories(std::string_view top) {
  if (top == "accuracy") return kAccuracySubs;
  if (top == "fluency") return kFluencySubs;
  if (top == "style") return kStyleSubs;
  if (top == "terminology") return kTerminologySubs;
  return {};
}

CategoryMatch normalize_category(std::string_view raw) {
  std::string_view trimmed = text::trim(raw);
  if (trimmed.size() >= 2 && trimmed.front() == '[' && trimmed.back() == ']')
    trimmed = text::trim(trimmed.substr(1, trimmed.size() - 2));

  const auto slash = trimmed.find('/');
  const std::string_view top_raw = slash == std::string_view::npos ? trimmed : trimmed.substr(0, slash);
  const std::string_view sub_raw =
      slash == std::string_view::npos ? std::string_view{} : text::trim(trimmed.substr(slash + 1));

  CategoryMatch m;
  const std::string folded = fold_label(top_raw);
  bool fuzzy = false;
  const auto top = match_top_level(folded, fuzzy);
  if (!top) {
    m.recognized = false;
    m.category = {"other", std::string(trimmed)};
    m.note = "unknown category '" + std::string(trimmed) + "' mapped to other";
    return m;
  }
  m.category.top = std::string(*top);
  if (fuzzy) m.note = "category '" + std::string(top_raw) + "' read as " + m.category.top;

  if (!sub_raw.empty()) {
    const std::string sub_folded = fold_label(sub_raw);
    m.category.sub = std::string(sub_raw);
    for (auto known : known_subcategories(m.category.top)) {
      if (sub_folded == known) {
        m.category.sub = std::string(known);
        break;
      }
    }
  }
  return m;
}

bool is_fluency_punctuation(const Category& c) {
  return c.top == "fluency" && (c.sub == "punctuation" || c.sub.starts_with("punctuation/"));
}

// ---------------------------------------------------------------------------
// MQM TSV

namespace {

struct Columns {
  std::optional<std::size_t> system, doc, seg_id, rater, source, target, category, severity;
  std::optional<std::size_t> lang_pair, reference, span;
};

Columns map_header(const std::vector<std::string>& header) {
  Columns c;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = text::to_lower(text::trim(header[i]));
    if (h == "system") c.system = i;
    else if (h == "doc") c.doc = i;
    else if (h == "seg_id" || h == "segment_id") c.seg_id = i;
    else if (h == "rater") c.rater = i;
    else if (h == "source" || h == "src") c.source = i;
    else if (h == "target" || h == "hypothesis" || h == "mt") c.target = i;
    else if (h == "category") c.category = i;
    else if (h == "severity") c.severity = i;
    else if (h == "lp" || h == "lang_pair" || h == "langpair") c.lang_pair = i;
    else if (h == "reference" || h == "ref") c.reference = i;
    else if (h == "span") c.span = i;
  }
  return c;
}

// Returns (hypothesis without markers, first marked span).
std::pair<std::string, std::optional<std::string>> strip_span_markers(std::string_view target) {
  static constexpr std::string_view kOpen = "<v>";
  static constexpr std::string_view kClose = "</v>";
  std::optional<std::string> span;
  const auto open = target.find(kOpen);
  if (open != std::string_view::npos) {
    const auto close = target.find(kClose, open + kOpen.size());
    if (close != std::string_view::npos)
      span = std::string(target.substr(open + kOpen.size(), close - open - kOpen.size()));
  }
  std::string hyp = text::replace_all(target, kOpen, "");
  hyp = text::replace_all(hyp, kClose, "");
  return {std::move(hyp), std::move(span)};
}

bool is_empty_severity(const std::string& sev) {
  return sev == "neutral" || sev == "no-error" || sev == "no error" || sev == "none" || sev.empty();
}

}  // namespace

MqmTable read_mqm_tsv(std::istream& in, const MqmTsvOptions& opts) {
  MqmTable table;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw DataError("MQM table is empty (no header row)");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = text::split(line, '\t');
  const Columns col = map_header(header);
  std::vector<std::string> missing;
  const std::pair<const char*, std::optional<std::size_t>> required[] = {
      {"system", col.system}, {"doc", col.doc},       {"seg_id", col.seg_id},
      {"rater", col.rater},   {"source", col.source}, {"target", col.target},
      {"category", col.category}, {"severity", col.severity}};
  for (const auto& [name, idx] : required)
    if (!idx) missing.emplace_back(name);
  if (!missing.empty()) throw DataError("MQM table header lacks columns: " + text::join(missing, ", "));

  std::map<SegmentKey, Segment> segments;
  std::map<std::pair<SegmentKey, std::string>, ErrorAnnotation> groups;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(line, '\t');
    if (cells.size() != header.size()) {
      table.issues.push_back({line_no, "expected " + std::to_string(header.size()) + " columns, found " +
                                           std::to_string(cells.size())});
      continue;
    }
    const auto cell = [&](std::optional<std::size_t> i) -> const std::string& { return cells[*i]; };

    SegmentKey key;
    key.lang_pair = col.lang_pair ? std::string(text::trim(cell(col.lang_pair))) : opts.default_lang_pair;
    key.system_id = std::string(text::trim(cell(col.system)));
    key.doc_id = std::string(text::trim(cell(col.doc)));
    const auto seg_text = text::trim(cell(col.seg_id));
    const auto [ptr, ec] = std::from_chars(seg_text.data(), seg_text.data() + seg_text.size(), key.seg_id);
    if (ec != std::errc{} || ptr != seg_text.data() + seg_text.size() || key.seg_id < 0) {
      table.issues.push_back({line_no, "seg_id '" + std::string(seg_text) + "' is not a non-negative integer"});
      continue;
    }
    if (key.system_id.empty()) {
      table.issues.push_back({line_no, "empty system id"});
      continue;
    }

    auto [hypothesis, marked_span] = strip_span_markers(cell(col.target));
    if (text::trim(hypothesis).empty()) {
      table.issues.push_back({line_no, "empty target text"});
      continue;
    }

    const std::string severity_raw = text::to_lower(text::trim(cell(col.severity)));
    const CategoryMatch category = normalize_category(cell(col.category));
    const bool no_error = is_no_error(category.category) || is_empty_severity(severity_raw);
    std::optional<Severity> severity;
    if (!no_error) {
      severity = parse_severity(severity_raw);
      if (!severity) {
        table.issues.push_back({line_no, "unknown severity '" + std::string(cell(col.severity)) + "'"});
        continue;
      }
    }

    if (!segments.contains(key)) {
      Segment seg;
      seg.key = key;
      seg.source = cell(col.source);
      if (col.reference) seg.reference = cell(col.reference);
      seg.hypothesis = hypothesis;
      segments.emplace(key, std::move(seg));
    }

    const std::string rater(text::trim(cell(col.rater)));
    auto& group = groups[{key, rater}];
    group.key = key;
    group.rater = rater;
    if (!no_error) {
      ErrorSpan span;
      span.severity = *severity;
      span.category = category.category;
      if (col.span) span.span = cell(col.span);
      else if (marked_span) span.span = *marked_span;
      group.spans.push_back(std::move(span));
    }
  }

  for (auto& [k, s] : segments) table.segments.push_back(std::move(s));
  for (auto& [k, a] : groups) table.annotations.push_back(std::move(a));
  return table;
}

MqmTable load_mqm_tsv(const std::filesystem::path& path, const MqmTsvOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open MQM table '" + path.string() + "'");
  return read_mqm_tsv(in, opts);
}

// ---------------------------------------------------------------------------
// Judge JSONL

JudgeLoad read_judge_jsonl(std::istream& in) {
  JudgeLoad out;
  std::map<SegmentKey, int> runs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    try {
      JudgeRecord r = judge_record_from_json(j);
      r.run_index = runs[r.key]++;
      out.records.push_back(std::move(r));
    } catch (const DataError& e) {
      out.issues.push_back({line_no, e.what()});
    }
  }
  return out;
}

JudgeLoad load_judge_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open judge records '" + path.string() + "'");
  return read_judge_jsonl(in);
}

// ---------------------------------------------------------------------------
// ScoreMatrix

ScoreMatrix::ScoreMatrix(std::vector<std::string> systems, std::vector<ItemKey> items)
    : systems_(std::move(systems)),
      items_(std::move(items)),
      values_(systems_.size() * items_.size(), 0.0),
      present_(systems_.size() * items_.size(), 0) {}

void ScoreMatrix::set(std::size_t system, std::size_t item, std::optional<double> value) {
  const std::size_t i = system * items_.size() + item;
  present_[i] = value.has_value();
  values_[i] = value.value_or(0.0);
}

std::optional<std::size_t> ScoreMatrix::find_system(std::string_view id) const {
  for (std::size_t i = 0; i < systems_.size(); ++i)
    if (systems_[i] == id) return i;
  return std::nullopt;
}

std::optional<std::size_t> ScoreMatrix::find_item(const ItemKey& key) const {
  for (std::size_t i = 0; i < items_.size(); ++i)
    if (items_[i] == key) return i;
  return std::nullopt;
}

std::size_t ScoreMatrix::count_present() const {
  return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), 1));
}

std::vector<std::string> ScoreMatrix::lang_pairs() const {
  std::set<std::string> langs;
  for (const auto& it : items_) langs.insert(it.lang_pair);
  return {langs.begin(), langs.end()};
}

ScoreMatrix ScoreMatrix::select_lang_pair(std::string_view lang_pair) const {
  std::vector<std::size_t> item_idx;
  for (std::size_t t = 0; t < items_.size(); ++t)
    if (items_[t].lang_pair == lang_pair) item_idx.push_back(t);
  std::vector<std::size_t> sys_idx;
  for (std::size_t s = 0; s < systems_.size(); ++s)
    for (auto t : item_idx)
      if (present_[s * items_.size() + t]) {
        sys_idx.push_back(s);
        break;
      }

  std::vector<std::string> systems;
  for (auto s : sys_idx) systems.push_back(systems_[s]);
  std::vector<ItemKey> items;
  for (auto t : item_idx) items.push_back(items_[t]);
  ScoreMatrix out(std::move(systems), std::move(items));
  for (std::size_t a = 0; a < sys_idx.size(); ++a)
    for (std::size_t b = 0; b < item_idx.size(); ++b) out.set(a, b, at(sys_idx[a], item_idx[b]));
  return out;
}

std::vector<ScoreEntry> ScoreMatrix::entries() const {
  std::vector<ScoreEntry> out;
  for (std::size_t s = 0; s < systems_.size(); ++s)
    for (std::size_t t = 0; t < items_.size(); ++t)
      if (auto v = at(s, t))
        out.push_back({{items_[t].lang_pair, systems_[s], items_[t].doc_id, items_[t].seg_id}, *v});
  return out;
}

ScoreMatrix build_score_matrix(std::span<const ScoreEntry> scores) {
  std::map<std::pair<std::string, ItemKey>, std::vector<double>> cells;
  std::set<std::string> systems;
  std::set<ItemKey> items;
  for (const auto& e : scores) {
    systems.insert(e.key.system_id);
    const ItemKey item = item_key(e.key);
    items.insert(item);
    cells[{e.key.system_id, item}].push_back(e.value);
  }
  std::vector<std::string> sys(systems.begin(), systems.end());
  std::vector<ItemKey> its(items.begin(), items.end());
  std::map<std::string, std::size_t> sys_index;
  for (std::size_t i = 0; i < sys.size(); ++i) sys_index[sys[i]] = i;
  std::map<ItemKey, std::size_t> item_index;
  for (std::size_t i = 0; i < its.size(); ++i) item_index[its[i]] = i;

  ScoreMatrix m(sys, its);
  for (auto& [cell, values] : cells) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    m.set(sys_index[cell.first], item_index[cell.second], sum / static_cast<double>(values.size()));
  }
  return m;
}

std::vector<ScoreMatrix> align(std::span<const ScoreMatrix> matrices) {
  if (matrices.empty()) return {};
  const ScoreMatrix& first = matrices.front();

  std::vector<std::string> systems;
  std::vector<std::vector<std::size_t>> sys_map(matrices.size());
  for (std::size_t s = 0; s < first.num_systems(); ++s) {
    std::vector<std::size_t> idx;
    for (const auto& m : matrices) {
      auto i = m.find_system(first.systems()[s]);
      if (!i) break;
      idx.push_back(*i);
    }
    if (idx.size() != matrices.size()) continue;
    systems.push_back(first.systems()[s]);
    for (std::size_t k = 0; k < matrices.size(); ++k) sys_map[k].push_back(idx[k]);
  }

  std::vector<std::map<ItemKey, std::size_t>> item_lookup(matrices.size());
  for (std::size_t k = 0; k < matrices.size(); ++k)
    for (std::size_t t = 0; t < matrices[k].num_items(); ++t) item_lookup[k][matrices[k].items()[t]] = t;

  std::vector<ItemKey> items;
  std::vector<std::vector<std::size_t>> item_map(matrices.size());
  for (const auto& key : first.items()) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < matrices.size(); ++k) {
      auto it = item_lookup[k].find(key);
      if (it == item_lookup[k].end()) break;
      idx.push_back(it->second);
    }
    if (idx.size() != matrices.size()) continue;
    items.push_back(key);
    for (std::size_t k = 0; k < matrices.size(); ++k) item_map[k].push_back(idx[k]);
  }

  std::vector<ScoreMatrix> out(matrices.size(), ScoreMatrix(systems, items));
  for (std::size_t s = 0; s < systems.size(); ++s) {
    for (std::size_t t = 0; t < items.size(); ++t) {
      bool all = true;
      for (std::size_t k = 0; k < matrices.size() && all; ++k)
        all = matrices[k].at(sys_map[k][s], item_map[k][t]).has_value();
      if (!all) continue;
      for (std::size_t k = 0; k < matrices.size(); ++k)
        out[k].set(s, t, matrices[k].at(sys_map[k][s], item_map[k][t]));
    }
  }
  return out;
}

}  // namespace mqmkit
