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

#include <gtest/gtest.h>

#include <sstream>

#include "mqmkit/io.hpp"
#include "mqmkit/text.hpp"
#include "mqmkit/trajectory_factory.hpp"
#include "mqmkit_cli/cli.hpp"
#include "support/e2e.hpp"
#include "support/stub_server.hpp"

namespace mqmkit {
namespace {

using testing::run_cli;

std::string fixture(const std::string& name) { return (testing::data_dir() / "fixtures/e2e" / name).string(); }

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}), cli::kUsage);
  EXPECT_EQ(run_cli({"bogus"}), cli::kUsage);
  EXPECT_EQ(run_cli({"metaeval", "--human"}), cli::kUsage);
  EXPECT_EQ(run_cli({"shapley", "--src", "1", "--ref", "2", "--joint", "3", "--empty", "nope"}), cli::kUsage);
}

TEST(Cli, MissingFileIsDataError) {
  EXPECT_EQ(run_cli({"score", "--annotations", "/nonexistent/a.jsonl"}), cli::kDataError);
}

TEST(Cli, Shapley) {
  std::string out;
  ASSERT_EQ(run_cli({"shapley", "--src", "68.8", "--ref", "65.2", "--joint", "68.0"}, &out), 0);
  const auto j = json::parse(out);
  EXPECT_EQ(j.at("phi_s").get<double>(), 3.2);
  EXPECT_EQ(j.at("phi_r").get<double>(), -2.2);
}

TEST(Cli, EndToEndDeterministicReport) {
  const auto a = testing::run_pipeline(testing::scratch_dir("e2e_a"), "7");
  const auto b = testing::run_pipeline(testing::scratch_dir("e2e_b"), "7");
  ASSERT_EQ(a.rc, 0);
  ASSERT_EQ(b.rc, 0);
  EXPECT_EQ(a.report, b.report);
  const auto j = json::parse(a.report);
  const auto& de = j.at("reports")[0].at("per_language").at("en-de");
  EXPECT_EQ(de.at("n_systems"), 3);
  EXPECT_EQ(de.at("n_items"), 50);
  EXPECT_EQ(de.at("n_pairs"), 150);
  const auto c = testing::run_pipeline(testing::scratch_dir("e2e_c"), "8");
  EXPECT_NE(json::parse(c.report).at("reports")[0].at("seed"), j.at("reports")[0].at("seed"));
}

TEST(Cli, AffineMetricTransformKeepsMetaScores) {
  const auto dir = testing::scratch_dir("e2e_affine");
  const auto base = testing::run_pipeline(dir, "11");
  ASSERT_EQ(base.rc, 0);
  const auto shifted = dir / "affine.jsonl";
  testing::affine_scores(base.metric_scores, shifted, 2.5, 7.0);
  ASSERT_EQ(run_cli({"metaeval", "--human", base.human_scores.string(), "--metric", shifted.string(), "--label",
                     "judge", "--seed", "11", "--out", (dir / "affine.json").string()}),
            0);
  const auto x = json::parse(base.report).at("reports")[0].at("per_language").at("en-de");
  const auto y = json::parse(read_text_file(dir / "affine.json")).at("reports")[0].at("per_language").at("en-de");
  EXPECT_EQ(x.at("spa"), y.at("spa"));
  EXPECT_EQ(x.at("acc_eq_star"), y.at("acc_eq_star"));
  EXPECT_EQ(x.at("kendall"), y.at("kendall"));
  EXPECT_EQ(testing::ranking(base.metric_scores), testing::ranking(shifted));
}

TEST(Cli, TableAndCsvFormats) {
  const auto dir = testing::scratch_dir("e2e_formats");
  const auto base = testing::run_pipeline(dir, "3");
  ASSERT_EQ(base.rc, 0);
  std::string table, csv;
  ASSERT_EQ(run_cli({"metaeval", "--human", base.human_scores.string(), "--metric", base.metric_scores.string(),
                     "--resamples", "50", "--format", "table"},
                    &table),
            0);
  EXPECT_NE(table.find("SPA(%)"), std::string::npos);
  EXPECT_NE(table.find("en-de"), std::string::npos);
  ASSERT_EQ(run_cli({"metaeval", "--human", base.human_scores.string(), "--metric", base.metric_scores.string(),
                     "--resamples", "50", "--format", "csv"},
                    &csv),
            0);
  EXPECT_EQ(csv.rfind("label,lang_pair,spa,", 0), 0U);
}

TEST(Cli, SynthAndValidate) {
  const auto dir = testing::scratch_dir("cli_synth");
  const auto data = (dir / "train.jsonl").string();
  std::string summary;
  ASSERT_EQ(run_cli({"synth", "--mqm", fixture("human.tsv"), "--mode", "ref", "--out", data}, &summary), 0);
  const auto rows = read_dataset_jsonl(data);
  EXPECT_EQ(rows.size(), 150U);
  std::string report;
  EXPECT_EQ(run_cli({"validate", "--dataset", data}, &report), 0);
  EXPECT_EQ(json::parse(report).at("valid"), 150);

  auto broken = rows;
  broken[0].target = text::replace_all(broken[0].target, "Score: ", "Score: -99");
  write_dataset_jsonl(dir / "broken.jsonl", broken);
  EXPECT_EQ(run_cli({"validate", "--dataset", (dir / "broken.jsonl").string()}), cli::kDataError);
}

TEST(Cli, ScoreAndAnalyze) {
  const auto dir = testing::scratch_dir("cli_analyze");
  ASSERT_EQ(run_cli({"ingest", "--mqm", fixture("human.tsv"), "--out-dir", dir.string()}), 0);
  std::string scores;
  ASSERT_EQ(run_cli({"score", "--annotations", (dir / "annotations.jsonl").string(), "--weights", "alt321"}, &scores),
            0);
  EXPECT_FALSE(scores.empty());
  std::string budget;
  ASSERT_EQ(run_cli({"analyze", "--kind", "budget", "--records", fixture("judge.jsonl"), "--human",
                     (dir / "human_scores.jsonl").string(), "--model-score", "direct"},
                    &budget),
            0);
  EXPECT_EQ(json::parse(budget).at("cells").size(), 10U);
  std::string typ;
  ASSERT_EQ(run_cli({"analyze", "--kind", "typology", "--judge", (dir / "annotations.jsonl").string(), "--human",
                     (dir / "annotations.jsonl").string()},
                    &typ),
            0);
  EXPECT_EQ(json::parse(typ).at("judge_only"), 0);
}

TEST(Cli, SignificanceSelfComparison) {
  const auto dir = testing::scratch_dir("cli_sig");
  const auto base = testing::run_pipeline(dir, "5");
  ASSERT_EQ(base.rc, 0);
  std::string out;
  ASSERT_EQ(run_cli({"significance", "--human", base.human_scores.string(), "--metric-a", base.metric_scores.string(),
                     "--metric-b", base.metric_scores.string(), "--meta", "acceq,pearson", "--resamples", "100"},
                    &out),
            0);
  const auto j = json::parse(out);
  EXPECT_EQ(j.at("ties"), 2);
}

TEST(Cli, PromptJudgeParseAgainstStub) {
  testing::StubServer server([](const std::string&, int seen) {
    return seen == 0 ? testing::StubServer::Reply{500, "retry me"} : testing::StubServer::Reply{};
  });
  const auto dir = testing::scratch_dir("cli_judge");
  ASSERT_EQ(run_cli({"ingest", "--mqm", fixture("human.tsv"), "--out-dir", dir.string()}), 0);
  const auto prompts = (dir / "prompts.jsonl").string();
  ASSERT_EQ(run_cli({"prompt", "--segments", (dir / "segments.jsonl").string(), "--mode", "joint", "--out", prompts}),
            0);
  const auto records = (dir / "records.jsonl").string();
  const std::vector<std::string> judge = {"judge", "--prompts", prompts, "--endpoint", server.url(), "--model", "m",
                                          "--parallelism", "4", "--backoff-base", "0.001", "--out", records};
  ASSERT_EQ(run_cli(judge), 0);
  EXPECT_EQ(server.total_requests(), 300);
  EXPECT_LE(server.max_in_flight(), 4);
  ASSERT_EQ(run_cli(judge), 0);
  EXPECT_EQ(server.total_requests(), 300);
  std::string parsed;
  ASSERT_EQ(run_cli({"parse", "--records", records, "--strict"}, &parsed), 0);
  std::istringstream in(parsed);
  const auto rows = read_jsonl(in);
  EXPECT_EQ(rows.size(), 150U);
  EXPECT_EQ(rows[0].at("spans").size(), 1U);
}

TEST(Cli, JudgeFailuresExitThree) {
  testing::StubServer server([](const std::string&, int) { return testing::StubServer::Reply{400, "no"}; });
  const auto dir = testing::scratch_dir("cli_judge_fail");
  ASSERT_EQ(run_cli({"ingest", "--mqm", fixture("human.tsv"), "--out-dir", dir.string()}), 0);
  const auto prompts = (dir / "prompts.jsonl").string();
  ASSERT_EQ(run_cli({"prompt", "--segments", (dir / "segments.jsonl").string(), "--demos", "none", "--out", prompts}),
            0);
  EXPECT_EQ(run_cli({"judge", "--prompts", prompts, "--endpoint", server.url(), "--model", "m", "--out",
                     (dir / "r.jsonl").string()}),
            cli::kEndpointFailure);
  EXPECT_EQ(run_cli({"judge", "--prompts", prompts, "--endpoint", server.url(), "--model", "m", "--parallelism", "0",
                     "--out", (dir / "r.jsonl").string()}),
            cli::kUsage);
}

}  // namespace
}  // namespace mqmkit
