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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "mqmkit/meta_eval.hpp"

namespace mqmkit::cli {

enum class ReportFormat { Json, Table, Csv };

ReportFormat parse_report_format(std::string_view text);

nlohmann::json report_to_json(const MetaReport& report);
nlohmann::json reports_to_json(std::span<const MetaReport> reports);

// json: canonical, sorted keys. table: one row per report with SPA(%) and
// Acc*eq per language, then the averages and "All". csv: one row per
// (report, language) plus an "avg" row per report.
std::string render_reports(std::span<const MetaReport> reports, ReportFormat format);

// Writes to `path`; an empty path or "-" writes to `out`.
void emit_report(std::span<const MetaReport> reports, ReportFormat format, const std::filesystem::path& path,
                 std::ostream& out);

}  // namespace mqmkit::cli
