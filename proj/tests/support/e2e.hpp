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

// Drives the CLI over the bundled 3-system x 50-segment fixture.

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mqmkit/io.hpp"
#include "mqmkit/meta_eval.hpp"
#include "mqmkit_cli/cli.hpp"
#include "support/paths.hpp"

namespace mqmkit::testing {

inline int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int rc = cli::dispatch(args, out, err);
  if (out_text) *out_text = out.str();
  return rc;
}

struct PipelineRun {
  int rc = 0;
  std::string report;       // canonical MetaReport JSON
  std::filesystem::path metric_scores;
  std::filesystem::path human_scores;
};

inline PipelineRun run_pipeline(const std::filesystem::path& work, const std::string& seed) {
  const auto fixture = data_dir() / "fixtures/e2e";
  PipelineRun r;
  r.human_scores = work / "human_scores.jsonl";
  r.metric_scores = work / "judge_scores.jsonl";
  r.rc = run_cli({"ingest", "--mqm", (fixture / "human.tsv").string(), "--out-dir", work.string()});
  if (r.rc) return r;
  r.rc = run_cli({"parse", "--records", (fixture / "judge.jsonl").string(), "--scale", "mqm", "--strict", "--out",
                  r.metric_scores.string()});
  if (r.rc) return r;
  r.rc = run_cli({"metaeval", "--human", r.human_scores.string(), "--metric", r.metric_scores.string(), "--label",
                  "judge", "--seed", seed, "--resamples", "1000", "--out", (work / "report.json").string()});
  if (r.rc) return r;
  r.report = read_text_file(work / "report.json");
  return r;
}

// Rewrites a score file with alpha * s + beta.
inline void affine_scores(const std::filesystem::path& in, const std::filesystem::path& out, double alpha,
                          double beta) {
  auto rows = read_jsonl_file(in);
  for (auto& row : rows)
    if (row.contains("score") && row.at("score").is_number())
      row["score"] = alpha * row.at("score").get<double>() + beta;
  write_jsonl_file(out, rows);
}

// System ids ordered best-first by mean score.
inline std::vector<std::string> ranking(const std::filesystem::path& scores) {
  std::vector<ScoreEntry> entries;
  for (const auto& row : read_jsonl_file(scores))
    if (row.contains("score") && row.at("score").is_number())
      entries.push_back({segment_key_from_json(row.at("seg")), row.at("score").get<double>()});
  const auto m = build_score_matrix(entries);
  const auto means = system_means(m);
  std::vector<std::size_t> idx(means.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return means[a] > means[b]; });
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(m.systems()[i]);
  return out;
}

}  // namespace mqmkit::testing
