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

#include "mqmkit_cli/report.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "mqmkit/error.hpp"
#include "mqmkit/io.hpp"
#include "mqmkit/text.hpp"

namespace mqmkit::cli {

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json scores_to_json(const MetaScores& s) {
  return {{"spa", opt(s.spa)},
          {"acc_eq_star", opt(s.acc_eq_star)},
          {"epsilon_star", opt(s.epsilon_star)},
          {"pearson", opt(s.pearson)},
          {"kendall", opt(s.kendall)},
          {"n_systems", s.n_systems},
          {"n_items", s.n_items},
          {"n_pairs", s.n_pairs}};
}

std::string pct(const std::optional<double>& v) { return v ? fmt::format("{:.1f}", *v * 100.0) : "-"; }

std::string plain(const std::optional<double>& v) { return v ? text::format_number(*v) : ""; }

std::vector<std::string> all_languages(std::span<const MetaReport> reports) {
  std::set<std::string> langs;
  for (const auto& r : reports)
    for (const auto& [lp, s] : r.per_language) langs.insert(lp);
  return {langs.begin(), langs.end()};
}

const MetaScores* find_language(const MetaReport& r, const std::string& lp) {
  for (const auto& [l, s] : r.per_language)
    if (l == lp) return &s;
  return nullptr;
}

std::string render_table(std::span<const MetaReport> reports) {
  const auto langs = all_languages(reports);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> group = {""};
  std::vector<std::string> header = {"Report"};
  for (const auto& lp : langs) {
    group.insert(group.end(), {lp, ""});
    header.insert(header.end(), {"SPA(%)", "Acc*eq"});
  }
  group.insert(group.end(), {"Avg.", "", ""});
  header.insert(header.end(), {"SPA(%)", "Acc*eq", "All"});
  rows.push_back(group);
  rows.push_back(header);
  for (const auto& r : reports) {
    std::vector<std::string> row = {r.label};
    for (const auto& lp : langs) {
      const MetaScores* s = find_language(r, lp);
      row.push_back(s ? pct(s->spa) : "-");
      row.push_back(s ? pct(s->acc_eq_star) : "-");
    }
    row.insert(row.end(), {pct(r.spa), pct(r.acc_eq_star), pct(r.avg_all)});
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], text::utf8_length(row[c]));
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      const std::size_t pad = width[c] - text::utf8_length(row[c]);
      if (c == 0) line += row[c] + std::string(pad, ' ');
      else line += std::string(pad, ' ') + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string render_csv(std::span<const MetaReport> reports) {
  std::string out = "label,lang_pair,spa,acc_eq_star,epsilon_star,pearson,kendall,n_systems,n_items,n_pairs,avg_all\n";
  const auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    return "\"" + text::replace_all(s, "\"", "\"\"") + "\"";
  };
  for (const auto& r : reports) {
    for (const auto& [lp, s] : r.per_language) {
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},\n", quote(r.label), quote(lp), plain(s.spa),
                         plain(s.acc_eq_star), plain(s.epsilon_star), plain(s.pearson), plain(s.kendall),
                         s.n_systems, s.n_items, s.n_pairs);
    }
    out += fmt::format("{},avg,{},{},,{},{},,,,{}\n", quote(r.label), plain(r.spa), plain(r.acc_eq_star),
                       plain(r.pearson), plain(r.kendall), plain(r.avg_all));
  }
  return out;
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  const std::string t = text::to_lower(text::trim(text));
  if (t == "json") return ReportFormat::Json;
  if (t == "table") return ReportFormat::Table;
  if (t == "csv") return ReportFormat::Csv;
  throw UsageError("unknown report format '" + std::string(text) + "' (expected json, table or csv)");
}

json report_to_json(const MetaReport& r) {
  json langs = json::object();
  for (const auto& [lp, s] : r.per_language) langs[lp] = scores_to_json(s);
  return {{"label", r.label},
          {"per_language", langs},
          {"average", {{"spa", opt(r.spa)},
                       {"acc_eq_star", opt(r.acc_eq_star)},
                       {"pearson", opt(r.pearson)},
                       {"kendall", opt(r.kendall)},
                       {"all", opt(r.avg_all)}}},
          {"resamples", r.resamples},
          {"seed", r.seed}};
}

json reports_to_json(std::span<const MetaReport> reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return {{"reports", arr}};
}

std::string render_reports(std::span<const MetaReport> reports, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return canonical_dump(reports_to_json(reports));
    case ReportFormat::Table: return render_table(reports);
    case ReportFormat::Csv: return render_csv(reports);
  }
  return {};
}

void emit_report(std::span<const MetaReport> reports, ReportFormat format, const std::filesystem::path& path,
                 std::ostream& out) {
  const std::string text = render_reports(reports, format);
  if (path.empty() || path == "-") out << text;
  else write_text_file(path, text);
}

}  // namespace mqmkit::cli
