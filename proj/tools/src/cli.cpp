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

#include "mqmkit_cli/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "mqmkit/attribution.hpp"
#include "mqmkit/error.hpp"
#include "mqmkit/hashing.hpp"
#include "mqmkit/io.hpp"
#include "mqmkit/judge_client.hpp"
#include "mqmkit/judge_parser.hpp"
#include "mqmkit/meta_eval.hpp"
#include "mqmkit/mqm_scorer.hpp"
#include "mqmkit/prompt_kit.hpp"
#include "mqmkit/text.hpp"
#include "mqmkit/think_analytics.hpp"
#include "mqmkit/trajectory_factory.hpp"
#include "mqmkit_cli/report.hpp"

namespace mqmkit::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxListedIssues = 20;

bool is_tsv(const fs::path& p) {
  const std::string ext = text::to_lower(p.extension().string());
  return ext == ".tsv" || ext == ".txt";
}

void write_output(const std::string& content, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") out << content;
  else write_text_file(path, content);
}

std::string jsonl_text(const std::vector<json>& rows) {
  std::string s;
  for (const auto& r : rows) s += r.dump() + "\n";
  return s;
}

void report_issues(const std::vector<LoadIssue>& issues, const fs::path& path, std::ostream& err) {
  for (std::size_t i = 0; i < issues.size() && i < kMaxListedIssues; ++i)
    err << "warning: " << path.string() << ":" << issues[i].line << ": " << issues[i].message << "\n";
  if (issues.size() > kMaxListedIssues)
    err << "warning: " << path.string() << ": " << issues.size() - kMaxListedIssues << " more rows skipped\n";
}

MqmTable load_table(const fs::path& path, const std::string& lang_pair, std::ostream& err) {
  MqmTsvOptions opts;
  if (!lang_pair.empty()) opts.default_lang_pair = lang_pair;
  MqmTable t = load_mqm_tsv(path, opts);
  report_issues(t.issues, path, err);
  return t;
}

bool is_failure_row(const json& row) {
  if (!row.contains("status") || !row.at("status").is_string()) return false;
  const std::string s = row.at("status");
  return s != "ok";
}

std::vector<Segment> read_segments(const fs::path& path, std::ostream& err) {
  if (is_tsv(path)) return load_table(path, "", err).segments;
  std::vector<Segment> out;
  for (const auto& row : read_jsonl_file(path)) out.push_back(segment_from_json(row));
  return out;
}

std::vector<ErrorAnnotation> read_annotations(const fs::path& path, std::ostream& err) {
  if (is_tsv(path)) return load_table(path, "", err).annotations;
  std::vector<ErrorAnnotation> out;
  for (const auto& row : read_jsonl_file(path)) {
    if (is_failure_row(row)) continue;
    out.push_back(annotation_from_json(row));
  }
  return out;
}

// Score rows ("score"), annotation rows ("spans", scored with `weights`), or
// an MQM table. Duplicates per segment (raters, runs) are averaged.
ScoreMatrix read_scores(const fs::path& path, const WeightScheme& weights, std::ostream& err) {
  if (is_tsv(path)) return rescore_matrix(load_table(path, "", err).annotations, weights);
  std::vector<ScoreEntry> entries;
  std::size_t skipped = 0;
  for (const auto& row : read_jsonl_file(path)) {
    if (is_failure_row(row)) {
      ++skipped;
      continue;
    }
    if (row.contains("score")) {
      entries.push_back(score_entry_from_json(row));
    } else {
      const ErrorAnnotation a = annotation_from_json(row);
      entries.push_back({a.key, score_annotation(a, weights).value});
    }
  }
  if (skipped > 0) err << "warning: " << path.string() << ": " << skipped << " failed records ignored\n";
  if (entries.empty()) throw DataError(path.string() + " contains no scores");
  return build_score_matrix(entries);
}

std::vector<DifficultyBin> bins_from(const std::string& spec) {
  return spec.empty() ? default_difficulty_bins() : parse_difficulty_bins(spec);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  return "\"" + text::replace_all(s, "\"", "\"\"") + "\"";
}

// ---------------------------------------------------------------- options

struct Shared {
  std::uint64_t seed = 0;
  std::string weights = "default";
  std::string out;
};

struct IngestOpts {
  std::string mqm;
  std::string lang_pair;
  std::string out_dir = ".";
};

struct PromptOpts {
  std::string segments;
  std::string mode = "src";
  std::string template_path;
  std::string demos = "default";
  std::string esa;
};

struct JudgeOpts {
  std::string prompts;
  std::string config;
  EndpointConfig ep;
  DecodeParams dp;
  bool no_top_k = false;
  bool retry_failed = false;
  std::vector<std::string> reasoning_fields;
};

struct ParseOpts {
  std::string records;
  bool strict = false;
  bool lenient = false;
  std::string scale = "spans";
  std::string segments;
};

struct MetaOpts {
  std::string human;
  std::vector<std::string> metrics;
  std::vector<std::string> labels;
  int resamples = 1000;
  unsigned threads = 1;
  std::string format = "json";
};

struct SigOpts {
  std::string human;
  std::string metric_a;
  std::string metric_b;
  std::string meta = "spa,acceq";
  int resamples = 1000;
  int inner_resamples = 100;
  double alpha = 0.05;
  unsigned threads = 1;
};

struct ShapleyOpts {
  double src = 0.0;
  double ref = 0.0;
  double joint = 0.0;
  std::string empty = "symmetric";
  std::string format = "json";
};

struct AnalyzeOpts {
  std::string kind;
  std::string records;
  std::string human;
  std::string metric;
  std::string judge;
  double tau = 1.0;
  std::string bins;
  std::string model_score = "spans";
  std::string format = "json";
};

struct SynthOpts {
  std::string mqm;
  std::string segments;
  std::string annotations;
  std::string mode = "src";
  std::optional<std::int64_t> balance;
  bool balance_min = false;
  bool keep_empty_source = false;
  std::optional<std::size_t> max_source_chars;
  std::optional<std::size_t> max_hypothesis_chars;
};

struct ValidateOpts {
  std::string dataset;
};

// --------------------------------------------------------------- commands

int run_ingest(const IngestOpts& o, const Shared& s, std::ostream& out, std::ostream& err) {
  const WeightScheme w = resolve_weight_scheme(s.weights);
  const MqmTable t = load_table(o.mqm, o.lang_pair, err);

  std::vector<json> segs, anns, scores;
  for (const auto& seg : t.segments) segs.push_back(to_json(seg));
  for (const auto& a : t.annotations) anns.push_back(to_json(a));
  for (const auto& e : rescore_matrix(t.annotations, w).entries()) scores.push_back(to_json(e));

  const fs::path dir = o.out_dir;
  write_jsonl_file(dir / "segments.jsonl", segs);
  write_jsonl_file(dir / "annotations.jsonl", anns);
  write_jsonl_file(dir / "human_scores.jsonl", scores);
  out << canonical_dump({{"segments", segs.size()},
                         {"annotations", anns.size()},
                         {"scores", scores.size()},
                         {"skipped_rows", t.issues.size()},
                         {"out_dir", dir.string()}});
  return kOk;
}

int run_prompt(const PromptOpts& o, const Shared& s, std::ostream& out, std::ostream& err) {
  const MaterialsMode mode = parse_materials_mode(o.mode);
  const auto segments = read_segments(o.segments, err);
  std::optional<TextTemplate> body;
  if (!o.template_path.empty()) body = load_template(o.template_path);

  std::vector<json> rows;
  const auto row = [&](const SegmentKey& key, const RenderedPrompt& p) {
    rows.push_back({{"seg", to_json(key)},
                    {"fingerprint", p.fingerprint},
                    {"template_id", p.template_id},
                    {"mode", std::string(to_string(mode))},
                    {"prompt", p.text}});
  };

  if (!o.esa.empty()) {
    std::map<SegmentKey, const Segment*> by_key;
    for (const auto& seg : segments) by_key.emplace(seg.key, &seg);
    std::set<SegmentKey> done;
    std::size_t missing = 0;
    for (const auto& a : read_annotations(o.esa, err)) {
      const auto it = by_key.find(a.key);
      if (it == by_key.end()) {
        ++missing;
        continue;
      }
      if (!done.insert(a.key).second) continue;
      row(a.key, build_rescoring_prompt(*it->second, format_error_blocks(a.spans), mode, body));
    }
    if (missing > 0) err << "warning: " << missing << " annotations have no matching segment\n";
  } else {
    PromptTemplate tmpl;
    tmpl.mode = mode;
    tmpl.body = body;
    if (o.demos == "default") tmpl.demos = default_demos();
    else if (o.demos != "none") throw UsageError("--demos must be 'default' or 'none'");
    for (const auto& seg : segments) row(seg.key, build_judge_prompt(seg, tmpl));
  }
  write_output(jsonl_text(rows), s.out, out);
  return kOk;
}

void apply_endpoint_config(const fs::path& path, EndpointConfig& ep, DecodeParams& dp) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError(path.string() + ": config must be a JSON object");
  const auto field = [&](const json& obj, const char* name, auto& target, const char* prefix) {
    if (!obj.contains(name)) return;
    try {
      target = obj.at(name).get<std::decay_t<decltype(target)>>();
    } catch (const json::exception&) {
      throw UsageError(path.string() + ": field '" + prefix + name + "' has the wrong type");
    }
  };
  field(j, "url", ep.url, "");
  field(j, "model", ep.model, "");
  field(j, "token_env", ep.token_env, "");
  field(j, "timeout_s", ep.timeout_s, "");
  field(j, "max_retries", ep.max_retries, "");
  field(j, "parallelism", ep.parallelism, "");
  field(j, "backoff_base_s", ep.backoff_base_s, "");
  field(j, "backoff_max_s", ep.backoff_max_s, "");
  field(j, "backoff_total_s", ep.backoff_total_s, "");
  field(j, "send_top_k", ep.send_top_k, "");
  field(j, "reasoning_fields", ep.reasoning_fields, "");
  if (j.contains("decode")) {
    const json& d = j.at("decode");
    field(d, "temperature", dp.temperature, "decode.");
    field(d, "top_p", dp.top_p, "decode.");
    field(d, "top_k", dp.top_k, "decode.");
    field(d, "max_tokens", dp.max_tokens, "decode.");
  }
}

int run_judge(JudgeOpts o, const CLI::App& cmd, const Shared& s, std::ostream& out, std::ostream& err) {
  // Config file first, then explicit flags on top.
  EndpointConfig ep;
  DecodeParams dp;
  if (!o.config.empty()) apply_endpoint_config(o.config, ep, dp);
  const auto given = [&](const char* name) { return cmd.get_option(name)->count() > 0; };
  if (given("--endpoint")) ep.url = o.ep.url;
  if (given("--model")) ep.model = o.ep.model;
  if (given("--token-env")) ep.token_env = o.ep.token_env;
  if (given("--timeout")) ep.timeout_s = o.ep.timeout_s;
  if (given("--max-retries")) ep.max_retries = o.ep.max_retries;
  if (given("--parallelism")) ep.parallelism = o.ep.parallelism;
  if (given("--backoff-base")) ep.backoff_base_s = o.ep.backoff_base_s;
  if (given("--backoff-max")) ep.backoff_max_s = o.ep.backoff_max_s;
  if (given("--backoff-total")) ep.backoff_total_s = o.ep.backoff_total_s;
  if (given("--reasoning-field")) ep.reasoning_fields = o.reasoning_fields;
  if (o.no_top_k) ep.send_top_k = false;
  if (given("--temperature")) dp.temperature = o.dp.temperature;
  if (given("--top-p")) dp.top_p = o.dp.top_p;
  if (given("--top-k")) dp.top_k = o.dp.top_k;
  if (given("--max-tokens")) dp.max_tokens = o.dp.max_tokens;
  if (s.out.empty() || s.out == "-") throw UsageError("judge needs --out (the output doubles as the resume file)");

  std::vector<PromptJob> jobs;
  for (const auto& row : read_jsonl_file(o.prompts)) {
    PromptJob job;
    job.key = segment_key_from_json(row.at("seg"));
    job.prompt.text = row.at("prompt").get<std::string>();
    job.prompt.fingerprint = row.at("fingerprint").get<std::string>();
    job.prompt.template_id = row.value("template_id", "");
    jobs.push_back(std::move(job));
  }

  BatchOptions bo;
  bo.output = s.out;
  bo.retry_failed = o.retry_failed;
  const auto result = run_batch(jobs, ep, dp, bo, [&ep] { return make_http_transport(ep); });
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  out << canonical_dump({{"requested", result.requested},
                         {"resumed", result.resumed},
                         {"issued", result.issued},
                         {"failed", result.failed},
                         {"output", s.out}});
  return result.failed > 0 ? kEndpointFailure : kOk;
}

int run_parse(const ParseOpts& o, const Shared& s, std::ostream& out, std::ostream& err) {
  const Strictness strictness = o.strict ? Strictness::Strict : Strictness::Lenient;
  const JudgeLoad load = load_judge_jsonl(o.records);
  report_issues(load.issues, o.records, err);

  std::map<SegmentKey, std::string> hypotheses;
  if (!o.segments.empty())
    for (const auto& seg : read_segments(o.segments, err)) hypotheses.emplace(seg.key, seg.hypothesis);

  std::optional<ScoreScale> scale;
  if (o.scale == "mqm") scale = ScoreScale::Mqm;
  else if (o.scale == "esa") scale = ScoreScale::Esa0to100;
  else if (o.scale != "spans") throw UsageError("--scale must be spans, mqm or esa");

  std::vector<json> rows;
  std::size_t failures = 0;
  for (const auto& rec : load.records) {
    json row = {{"seg", to_json(rec.key)}, {"fingerprint", rec.fingerprint}, {"run_index", rec.run_index}};
    if (rec.failed) {
      row["status"] = "judge_failed";
      row["error"] = rec.error;
      rows.push_back(std::move(row));
      ++failures;
      continue;
    }
    try {
      if (scale) {
        row["score"] = parse_direct_score(rec.answer, *scale);
        row["warnings"] = json::array();
      } else {
        ParseOptions po;
        if (const auto it = hypotheses.find(rec.key); it != hypotheses.end()) po.hypothesis = it->second;
        const ParsedJudgment pj = parse_error_spans(rec.answer, strictness, po);
        json spans = json::array();
        for (const auto& sp : pj.annotation.spans) spans.push_back(to_json(sp));
        row["spans"] = spans;
        row["warnings"] = pj.parse_warnings;
      }
      if (rec.truncated) row["truncated"] = true;
      row["status"] = "ok";
    } catch (const ParseError& e) {
      row["status"] = "parse_error";
      row["error"] = e.what();
      ++failures;
    }
    rows.push_back(std::move(row));
  }
  write_output(jsonl_text(rows), s.out, out);
  err << "parsed " << rows.size() - failures << " of " << rows.size() << " records\n";
  return strictness == Strictness::Strict && failures > 0 ? kDataError : kOk;
}

int run_score(const std::string& annotations, const Shared& s, std::ostream& out, std::ostream& err) {
  const WeightScheme w = resolve_weight_scheme(s.weights);
  std::vector<ScoreEntry> entries;
  for (const auto& a : read_annotations(annotations, err)) entries.push_back({a.key, score_annotation(a, w).value});
  if (entries.empty()) throw DataError(annotations + " contains no annotations");
  std::vector<json> rows;
  for (const auto& e : build_score_matrix(entries).entries()) rows.push_back(to_json(e));
  write_output(jsonl_text(rows), s.out, out);
  return kOk;
}

int run_metaeval(const MetaOpts& o, const Shared& s, std::ostream& out, std::ostream& err) {
  const WeightScheme w = resolve_weight_scheme(s.weights);
  const ReportFormat format = parse_report_format(o.format);
  if (!o.labels.empty() && o.labels.size() != o.metrics.size())
    throw UsageError("--label must be given once per --metric");

  TestConfig cfg;
  cfg.resamples = o.resamples;
  cfg.seed = derive_seed(s.seed, "metaeval");
  cfg.threads = o.threads;
  cfg.validate();

  const ScoreMatrix human = read_scores(o.human, w, err);
  std::vector<MetaReport> reports;
  for (std::size_t i = 0; i < o.metrics.size(); ++i) {
    const std::string label = o.labels.empty() ? fs::path(o.metrics[i]).stem().string() : o.labels[i];
    MetaReport r = meta_evaluate(human, read_scores(o.metrics[i], w, err), cfg, label);
    r.seed = s.seed;
    reports.push_back(std::move(r));
  }
  emit_report(reports, format, s.out, out);
  return kOk;
}

int run_significance(const SigOpts& o, const Shared& s, std::ostream& out, std::ostream& err) {
  const WeightScheme w = resolve_weight_scheme(s.weights);
  std::vector<MetaMetric> metas;
  for (const auto& m : text::split(o.meta, ',')) metas.push_back(parse_meta_metric(m));
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw UsageError("--alpha must be in (0, 1)");

  SignificanceConfig cfg;
  cfg.test.resamples = o.resamples;
  cfg.test.seed = derive_seed(s.seed, "significance");
  cfg.test.threads = o.threads;
  cfg.spa_inner_resamples = o.inner_resamples;

  const ScoreMatrix human = read_scores(o.human, w, err);
  const ScoreMatrix a = read_scores(o.metric_a, w, err);
  const ScoreMatrix b = read_scores(o.metric_b, w, err);
  const ScoreMatrix all[] = {human, a, b};
  const auto aligned = align(all);

  std::vector<ComparisonSetting> settings;
  for (const auto& lp : aligned[0].lang_pairs()) {
    for (MetaMetric m : metas) {
      settings.push_back({lp, m, aligned[0].select_lang_pair(lp), aligned[1].select_lang_pair(lp),
                          aligned[2].select_lang_pair(lp)});
    }
  }
  if (settings.empty()) throw DataError("the three score files share no language pair");
  const WinTieLoss wtl = win_tie_loss(settings, cfg, o.alpha);

  json rows = json::array();
  for (const auto& st : wtl.settings) {
    rows.push_back({{"language", st.language},
                    {"level", st.level},
                    {"meta", std::string(to_string(st.meta))},
                    {"outcome", std::string(to_string(st.outcome))},
                    {"metric_a", st.result.metric_a},
                    {"metric_b", st.result.metric_b},
                    {"delta", st.result.delta},
                    {"p_two_sided", st.result.p_two_sided},
                    {"p_a_better", st.result.p_a_better},
                    {"p_b_better", st.result.p_b_better}});
  }
  write_output(canonical_dump({{"wins", wtl.wins},
                               {"ties", wtl.ties},
                               {"losses", wtl.losses},
                               {"alpha", o.alpha},
                               {"resamples", o.resamples},
                               {"inner_resamples", o.inner_resamples},
                               {"seed", s.seed},
                               {"settings", rows}}),
               s.out, out);
  return kOk;
}

int run_shapley(const ShapleyOpts& o, const Shared& s, std::ostream& out) {
  const AttributionResult r = shapley_mt({o.src, o.ref, o.joint}, parse_empty_coalition(o.empty));
  std::string content;
  if (o.format == "json") {
    content = canonical_dump({{"phi_s", r.phi_s},
                              {"phi_r", r.phi_r},
                              {"reading", std::string(to_string(r.reading))},
                              {"note", r.approximation_note},
                              {"inputs", {{"src", o.src}, {"ref", o.ref}, {"joint", o.joint}}}});
  } else if (o.format == "table") {
    content = "phi_s  " + text::format_number(r.phi_s) + "\nphi_r  " + text::format_number(r.phi_r) + "\n" +
              "# " + r.approximation_note + "\n";
  } else {
    throw UsageError("--format must be json or table for shapley");
  }
  write_output(content, s.out, out);
  return kOk;
}

std::string budget_csv(const std::vector<BudgetCell>& cells) {
  std::string s = "bin,tag,count,whisker_low,q1,median,q3,whisker_high,outliers\n";
  for (const auto& c : cells) {
    s += csv_field(c.bin) + "," + std::string(to_string(c.tag)) + "," + std::to_string(c.count);
    if (c.summary) {
      const auto& b = *c.summary;
      for (double v : {b.whisker_low, b.q1, b.median, b.q3, b.whisker_high}) s += "," + text::format_number(v);
      s += "," + std::to_string(b.outliers) + "\n";
    } else {
      s += ",,,,,,0\n";
    }
  }
  return s;
}

int run_analyze(const AnalyzeOpts& o, const Shared& s, std::ostream& out, std::ostream& err) {
  const WeightScheme w = resolve_weight_scheme(s.weights);
  const bool csv = o.format == "csv";
  if (!csv && o.format != "json") throw UsageError("--format must be json or csv for analyze");
  const auto need = [](const std::string& v, const char* flag) {
    if (v.empty()) throw UsageError(std::string("analyze needs ") + flag);
  };

  std::string content;
  if (o.kind == "budget") {
    need(o.records, "--records");
    need(o.human, "--human");
    const auto bins = bins_from(o.bins);
    const ScoreMatrix human = read_scores(o.human, w, err);
    const JudgeLoad load = load_judge_jsonl(o.records);
    report_issues(load.issues, o.records, err);

    std::vector<BudgetObservation> obs;
    std::size_t skipped = 0;
    json budgets = json::array();
    for (const auto& rec : load.records) {
      const auto sys = human.find_system(rec.key.system_id);
      const auto item = human.find_item(item_key(rec.key));
      const auto h = sys && item ? human.at(*sys, *item) : std::nullopt;
      if (rec.failed || !h) {
        ++skipped;
        continue;
      }
      double model = 0.0;
      try {
        model = o.model_score == "direct" ? parse_direct_score(rec.answer, ScoreScale::Mqm)
                                          : score_annotation(parse_error_spans(rec.answer, Strictness::Lenient).annotation, w).value;
      } catch (const ParseError&) {
        ++skipped;
        continue;
      }
      const BudgetStats b = thinking_budget(rec);
      obs.push_back({static_cast<double>(b.tokens), *h, model});
    }
    if (skipped > 0) err << "warning: " << skipped << " records without a human score or a readable judgment\n";
    const auto cells = budget_by_difficulty(obs, bins, o.tau);
    if (csv) {
      content = budget_csv(cells);
    } else {
      json arr = json::array();
      for (const auto& c : cells) {
        json cell = {{"bin", c.bin}, {"tag", std::string(to_string(c.tag))}, {"count", c.count}};
        if (c.summary) {
          cell["whisker_low"] = c.summary->whisker_low;
          cell["q1"] = c.summary->q1;
          cell["median"] = c.summary->median;
          cell["q3"] = c.summary->q3;
          cell["whisker_high"] = c.summary->whisker_high;
          cell["outliers"] = c.summary->outliers;
        }
        arr.push_back(std::move(cell));
      }
      content = canonical_dump({{"tau", o.tau}, {"observations", obs.size()}, {"cells", arr}});
    }
  } else if (o.kind == "distribution") {
    need(o.metric, "--metric");
    need(o.human, "--human");
    const auto bins = bins_from(o.bins);
    const DistributionReport r = distribution_report(read_scores(o.metric, w, err), read_scores(o.human, w, err), bins);
    if (csv) {
      content = "matrix,bin,count,fraction\n";
      for (const auto* h : {&r.metric, &r.human}) {
        const std::string name = h == &r.metric ? "metric" : "human";
        for (std::size_t i = 0; i < h->labels.size(); ++i)
          content += name + "," + csv_field(h->labels[i]) + "," + std::to_string(h->counts[i]) + "," +
                     text::format_number(h->fractions[i]) + "\n";
      }
    } else {
      const auto hist = [](const Histogram& h) {
        return json{{"labels", h.labels}, {"counts", h.counts}, {"fractions", h.fractions},
                    {"unbinned", h.unbinned}, {"n", h.n}, {"zero_rate", h.zero_rate}};
      };
      content = canonical_dump(
          {{"metric", hist(r.metric)}, {"human", hist(r.human)}, {"overestimation_index", r.overestimation_index}});
    }
  } else if (o.kind == "typology") {
    need(o.judge, "--judge");
    need(o.human, "--human");
    const DiscrepancyReport r = discrepancy_typology(read_annotations(o.judge, err), read_annotations(o.human, err));
    if (csv) {
      content = "severity,category,judge_only,human_only\n";
      for (const auto& c : r.counts)
        content += std::string(to_string(c.severity)) + "," + csv_field(c.category.path()) + "," +
                   std::to_string(c.judge_only) + "," + std::to_string(c.human_only) + "\n";
    } else {
      json arr = json::array();
      for (const auto& c : r.counts)
        arr.push_back({{"severity", std::string(to_string(c.severity))},
                       {"category", c.category.path()},
                       {"judge_only", c.judge_only},
                       {"human_only", c.human_only}});
      content = canonical_dump(
          {{"segments", r.segments}, {"judge_only", r.judge_only}, {"human_only", r.human_only}, {"counts", arr}});
    }
  } else {
    throw UsageError("--kind must be budget, distribution or typology");
  }
  write_output(content, s.out, out);
  return kOk;
}

int run_synth(const SynthOpts& o, const Shared& s, std::ostream& out, std::ostream& err) {
  const WeightScheme w = resolve_weight_scheme(s.weights);
  const MaterialsMode mode = parse_materials_mode(o.mode);
  if (s.out.empty() || s.out == "-") throw UsageError("synth needs --out");
  if (o.balance && o.balance_min) throw UsageError("--balance and --balance-min are exclusive");

  std::vector<Segment> segments;
  std::vector<ErrorAnnotation> annotations;
  if (!o.mqm.empty()) {
    MqmTable t = load_table(o.mqm, "", err);
    segments = std::move(t.segments);
    annotations = std::move(t.annotations);
  } else if (!o.segments.empty() && !o.annotations.empty()) {
    segments = read_segments(o.segments, err);
    annotations = read_annotations(o.annotations, err);
  } else {
    throw UsageError("synth needs --mqm, or --segments together with --annotations");
  }

  SynthFilter filter;
  filter.drop_empty_source = !o.keep_empty_source;
  filter.max_source_chars = o.max_source_chars;
  filter.max_hypothesis_chars = o.max_hypothesis_chars;
  SynthResult synth = synthesize_dataset(segments, annotations, w, mode, filter);

  json groups = json::array();
  json warnings = json::array();
  std::vector<TrainingInstance> dataset = std::move(synth.instances);
  if (o.balance || o.balance_min) {
    if (dataset.empty()) throw DataError("nothing to balance: no instances were synthesized");
    BalancedDataset b = balance_dataset(dataset, o.balance, derive_seed(s.seed, "synth/balance"));
    for (const auto& g : b.groups)
      groups.push_back({{"lang_pair", g.lang_pair}, {"before", g.before}, {"after", g.after}});
    for (const auto& wmsg : b.warnings) {
      err << "warning: " << wmsg << "\n";
      warnings.push_back(wmsg);
    }
    dataset = std::move(b.instances);
  }
  write_dataset_jsonl(s.out, dataset);
  out << canonical_dump({{"instances", dataset.size()},
                         {"filtered", synth.filtered},
                         {"missing_segment", synth.missing_segment},
                         {"groups", groups},
                         {"warnings", warnings},
                         {"filters", filter.describe()},
                         {"output", s.out}});
  return kOk;
}

int run_validate(const ValidateOpts& o, const Shared& s, std::ostream& out) {
  const WeightScheme w = resolve_weight_scheme(s.weights);
  const auto dataset = read_dataset_jsonl(o.dataset);
  std::map<std::string, std::int64_t> by_kind = {{"conformance", 0}, {"score_consistency", 0}, {"block_order", 0}};
  json examples = json::array();
  std::int64_t valid = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto v = validate_instance(dataset[i], w);
    if (v.empty()) ++valid;
    for (const auto& viol : v) {
      ++by_kind[std::string(to_string(viol.kind))];
      if (examples.size() < kMaxListedIssues)
        examples.push_back({{"index", i}, {"kind", std::string(to_string(viol.kind))}, {"message", viol.message}});
    }
  }
  write_output(canonical_dump({{"instances", dataset.size()},
                               {"valid", valid},
                               {"violations", by_kind},
                               {"examples", examples}}),
               s.out, out);
  return valid == static_cast<std::int64_t>(dataset.size()) ? kOk : kDataError;
}

void add_shared(CLI::App* cmd, Shared& s, bool seed, bool weights) {
  cmd->add_option("--out,-o", s.out, "Output file (default: stdout)");
  if (seed) cmd->add_option("--seed", s.seed, "Global seed; stages derive their own seeds from it");
  if (weights)
    cmd->add_option("--weights", s.weights, "Severity weights: default, alt321, or a JSON file")
        ->capture_default_str();
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mqmkit: MQM judge prompting, parsing, scoring and meta-evaluation", "mqmkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");
  Shared shared;

  IngestOpts ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Convert an MQM table into segment, annotation and score files");
  c_ingest->add_option("--mqm", ingest.mqm, "MQM TSV table")->required();
  c_ingest->add_option("--lang-pair", ingest.lang_pair, "Language pair when the table has no lp column");
  c_ingest->add_option("--out-dir", ingest.out_dir, "Directory for the JSON Lines outputs")->capture_default_str();
  add_shared(c_ingest, shared, false, true);

  PromptOpts prompt;
  auto* c_prompt = app.add_subcommand("prompt", "Render judge or rescoring prompts");
  c_prompt->add_option("--segments", prompt.segments, "Segments (JSON Lines or MQM TSV)")->required();
  c_prompt->add_option("--mode", prompt.mode, "Materials shown: src, ref or joint")->capture_default_str();
  c_prompt->add_option("--template", prompt.template_path, "Custom template file");
  c_prompt->add_option("--demos", prompt.demos, "Demonstrations: default or none")->capture_default_str();
  c_prompt->add_option("--esa", prompt.esa, "Annotations; renders 0-100 rescoring prompts instead");
  add_shared(c_prompt, shared, false, false);

  JudgeOpts judge;
  auto* c_judge = app.add_subcommand("judge", "Send prompts to a chat-completion endpoint (resumable)");
  c_judge->add_option("--prompts", judge.prompts, "Prompt file from `prompt`")->required();
  c_judge->add_option("--config", judge.config, "Endpoint config JSON");
  c_judge->add_option("--endpoint", judge.ep.url, "Chat-completions URL");
  c_judge->add_option("--model", judge.ep.model, "Model name");
  c_judge->add_option("--token-env", judge.ep.token_env, "Environment variable holding the bearer token");
  c_judge->add_option("--parallelism", judge.ep.parallelism, "Maximum requests in flight");
  c_judge->add_option("--timeout", judge.ep.timeout_s, "Per-request timeout in seconds");
  c_judge->add_option("--max-retries", judge.ep.max_retries, "Retries for 429, 5xx and timeouts");
  c_judge->add_option("--backoff-base", judge.ep.backoff_base_s, "First retry delay in seconds");
  c_judge->add_option("--backoff-max", judge.ep.backoff_max_s, "Largest single retry delay in seconds");
  c_judge->add_option("--backoff-total", judge.ep.backoff_total_s, "Ceiling on summed retry delays in seconds");
  c_judge->add_option("--reasoning-field", judge.reasoning_fields, "Message field carrying reasoning (repeatable)");
  c_judge->add_option("--temperature", judge.dp.temperature, "Sampling temperature");
  c_judge->add_option("--top-p", judge.dp.top_p, "Nucleus sampling mass");
  c_judge->add_option("--top-k", judge.dp.top_k, "Top-k sampling");
  c_judge->add_option("--max-tokens", judge.dp.max_tokens, "Maximum output tokens");
  c_judge->add_flag("--no-top-k", judge.no_top_k, "Do not send top_k");
  c_judge->add_flag("--retry-failed", judge.retry_failed, "Re-dispatch failure records found in the output file");
  add_shared(c_judge, shared, false, false);

  ParseOpts parse;
  auto* c_parse = app.add_subcommand("parse", "Parse judge completions into spans or direct scores");
  c_parse->add_option("--records", parse.records, "Judge records (JSON Lines)")->required();
  auto* strict = c_parse->add_flag("--strict", parse.strict, "Reject anything outside the block format");
  auto* lenient = c_parse->add_flag("--lenient", parse.lenient, "Tolerate common format drift (default)");
  strict->excludes(lenient);
  c_parse->add_option("--scale", parse.scale, "spans, mqm or esa")->capture_default_str();
  c_parse->add_option("--segments", parse.segments, "Segments; spans must then occur in the hypothesis");
  add_shared(c_parse, shared, false, false);

  std::string score_in;
  auto* c_score = app.add_subcommand("score", "Score annotations under a weight scheme");
  c_score->add_option("--annotations", score_in, "Annotations (JSON Lines or MQM TSV)")->required();
  add_shared(c_score, shared, false, true);

  MetaOpts meta;
  auto* c_meta = app.add_subcommand("metaeval", "Meta-evaluate metric scores against human scores");
  c_meta->add_option("--human", meta.human, "Human scores, annotations, or MQM TSV")->required();
  c_meta->add_option("--metric", meta.metrics, "Metric scores or annotations (repeatable)")->required();
  c_meta->add_option("--label", meta.labels, "Report label per --metric");
  c_meta->add_option("--resamples", meta.resamples, "Permutation resamples")->capture_default_str();
  c_meta->add_option("--threads", meta.threads, "Worker threads (results do not depend on it)");
  c_meta->add_option("--format", meta.format, "json, table or csv")->capture_default_str();
  add_shared(c_meta, shared, true, true);

  SigOpts sig;
  auto* c_sig = app.add_subcommand("significance", "Permutation test between two metrics");
  c_sig->add_option("--human", sig.human, "Human scores")->required();
  c_sig->add_option("--metric-a", sig.metric_a, "First metric")->required();
  c_sig->add_option("--metric-b", sig.metric_b, "Second metric")->required();
  c_sig->add_option("--meta", sig.meta, "Comma-separated meta-metrics: spa, acceq, pearson, kendall")
      ->capture_default_str();
  c_sig->add_option("--resamples", sig.resamples, "Outer resamples")->capture_default_str();
  c_sig->add_option("--inner-resamples", sig.inner_resamples, "SPA resamples inside each outer resample")
      ->capture_default_str();
  c_sig->add_option("--alpha", sig.alpha, "Significance level")->capture_default_str();
  c_sig->add_option("--threads", sig.threads, "Worker threads (results do not depend on it)");
  add_shared(c_sig, shared, true, true);

  ShapleyOpts shap;
  auto* c_shap = app.add_subcommand("shapley", "Attribute a meta-score to source and reference materials");
  c_shap->add_option("--src", shap.src, "Meta-score with source only")->required();
  c_shap->add_option("--ref", shap.ref, "Meta-score with reference only")->required();
  c_shap->add_option("--joint", shap.joint, "Meta-score with both")->required();
  c_shap->add_option("--empty", shap.empty, "Stand-in for v(empty): symmetric or ref-baseline")
      ->capture_default_str();
  c_shap->add_option("--format", shap.format, "json or table")->capture_default_str();
  add_shared(c_shap, shared, false, false);

  AnalyzeOpts an;
  auto* c_an = app.add_subcommand("analyze", "Thinking-budget, score-distribution and error-typology tables");
  c_an->add_option("--kind", an.kind, "budget, distribution or typology")->required();
  c_an->add_option("--records", an.records, "Judge records (budget)");
  c_an->add_option("--human", an.human, "Human scores or annotations");
  c_an->add_option("--metric", an.metric, "Metric scores (distribution)");
  c_an->add_option("--judge", an.judge, "Parsed judge annotations (typology)");
  c_an->add_option("--tau", an.tau, "Alignment tolerance")->capture_default_str();
  c_an->add_option("--bins", an.bins, "Descending bin edges starting at 0, e.g. 0,-1,-5,-25");
  c_an->add_option("--model-score", an.model_score, "spans or direct")->capture_default_str();
  c_an->add_option("--format", an.format, "json or csv")->capture_default_str();
  add_shared(c_an, shared, false, true);

  SynthOpts syn;
  auto* c_syn = app.add_subcommand("synth", "Synthesize thinking-trajectory training data from human MQM");
  c_syn->add_option("--mqm", syn.mqm, "MQM TSV table");
  c_syn->add_option("--segments", syn.segments, "Segments (JSON Lines)");
  c_syn->add_option("--annotations", syn.annotations, "Human annotations (JSON Lines)");
  c_syn->add_option("--mode", syn.mode, "src or ref")->capture_default_str();
  c_syn->add_option("--balance", syn.balance, "Subsample every language pair to this many instances");
  c_syn->add_flag("--balance-min", syn.balance_min, "Subsample every language pair to the smallest group");
  c_syn->add_flag("--keep-empty-source", syn.keep_empty_source, "Keep segments with an empty source");
  c_syn->add_option("--max-source-chars", syn.max_source_chars, "Drop longer sources");
  c_syn->add_option("--max-hypothesis-chars", syn.max_hypothesis_chars, "Drop longer translations");
  add_shared(c_syn, shared, true, true);

  ValidateOpts val;
  auto* c_val = app.add_subcommand("validate", "Check a synthesized dataset");
  c_val->add_option("--dataset", val.dataset, "Dataset from `synth`")->required();
  add_shared(c_val, shared, false, true);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kUsage;
  }

  try {
    if (c_ingest->parsed()) return run_ingest(ingest, shared, out, err);
    if (c_prompt->parsed()) return run_prompt(prompt, shared, out, err);
    if (c_judge->parsed()) return run_judge(judge, *c_judge, shared, out, err);
    if (c_parse->parsed()) return run_parse(parse, shared, out, err);
    if (c_score->parsed()) return run_score(score_in, shared, out, err);
    if (c_meta->parsed()) return run_metaeval(meta, shared, out, err);
    if (c_sig->parsed()) return run_significance(sig, shared, out, err);
    if (c_shap->parsed()) return run_shapley(shap, shared, out);
    if (c_an->parsed()) return run_analyze(an, shared, out, err);
    if (c_syn->parsed()) return run_synth(syn, shared, out, err);
    if (c_val->parsed()) return run_validate(val, shared, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Usage: return kUsage;
      case ErrorKind::Endpoint: return kEndpointFailure;
      default: return kDataError;
    }
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  err << app.help();
  return kUsage;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace mqmkit::cli
