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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mqmkit/attribution.hpp"
#include "mqmkit/error.hpp"
#include "mqmkit/hashing.hpp"
#include "mqmkit/io.hpp"
#include "mqmkit/judge_client.hpp"
#include "mqmkit/judge_parser.hpp"
#include "mqmkit/meta_eval.hpp"
#include "mqmkit/mqm_scorer.hpp"
#include "mqmkit/trajectory_factory.hpp"
#include "oracles/oracles.hpp"
#include "support/e2e.hpp"
#include "support/generators.hpp"
#include "support/golden.hpp"
#include "support/paths.hpp"
#include "support/stub_server.hpp"

namespace {

using namespace mqmkit;

// Collects the first few failed checks of a criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (notes_.size() < 3) notes_.push_back(what);
  }
  void note(const std::string& s) { info_.push_back(s); }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    std::string s;
    for (const auto& i : info_) s += (s.empty() ? "" : ", ") + i;
    if (failures_) {
      s += (s.empty() ? "" : "; ") + std::to_string(failures_) + " failed check(s):";
      for (const auto& n : notes_) s += " [" + n + "]";
    }
    return s;
  }

 private:
  int failures_ = 0;
  std::vector<std::string> notes_;
  std::vector<std::string> info_;
};

struct Criterion {
  int id;
  std::string name;
  double limit_s;
  std::function<void(Checks&)> run;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void shapley(Checks& c) {
  const auto r = shapley_mt({68.8, 65.2, 68.0});
  c.expect(r.phi_s == 3.2, "phi_s = " + fmt_double(r.phi_s));
  c.note("phi_s=" + fmt_double(r.phi_s) + " phi_r=" + fmt_double(r.phi_r));

  // Meta-scores are reported as percentages with two decimals; shifts on the
  // same grid are exact after quantization.
  SplitMix64 rng(1001);
  const auto grid = [&](std::int64_t span) {
    return static_cast<double>(static_cast<std::int64_t>(rng.below(2 * span + 1)) - span) / 100.0;
  };
  for (int i = 0; i < 10000; ++i) {
    const AttributionInput in{grid(10000), grid(10000), grid(10000)};
    const auto a = shapley_mt(in);
    const auto sw = shapley_mt({in.v_ref, in.v_src, in.v_joint});
    c.expect(sw.phi_s_half_nanos == a.phi_r_half_nanos && sw.phi_r_half_nanos == a.phi_s_half_nanos, "swap");
    c.expect(a.phi_s_half_nanos + a.phi_r_half_nanos == shapley_sum_half_nanos(in), "sum");
    const double k = grid(5000);
    const auto t = shapley_mt({in.v_src + k, in.v_ref + k, in.v_joint + k});
    c.expect(t.phi_s_half_nanos == a.phi_s_half_nanos && t.phi_r_half_nanos == a.phi_r_half_nanos, "translation");
  }
  c.note("10000 triples");
}

void mqm(Checks& c) {
  const auto w = WeightScheme::standard();
  const ErrorSpan major{Severity::Major, {"accuracy", "mistranslation"}, "a"};
  const ErrorSpan critical{Severity::Critical, {"accuracy", "omission"}, "b"};
  const ErrorSpan punct{Severity::Minor, {"fluency", "punctuation"}, ","};
  const ErrorSpan minor{Severity::Minor, {"style", "awkward"}, "c"};
  const auto val = [&](std::vector<ErrorSpan> s) { return score_spans(s, w).value; };
  c.expect(val({major}) == -5.0, "major");
  c.expect(val({critical}) == -25.0, "critical");
  c.expect(val({punct}) == -0.1, "punct");
  c.expect(val({critical, major, punct, minor, minor}) == -32.1, "mixed -32.1");
  const double mixed = val({critical, minor, punct, minor});
  c.expect(mixed == -27.1, "mixed -27.1 = " + fmt_double(mixed));
  c.note("fixtures -5/-25/-0.1/" + fmt_double(mixed));

  SplitMix64 rng(2002);
  for (int i = 0; i < 10000; ++i) {
    const auto a = testing::random_spans(rng, 8);
    const auto b = testing::random_spans(rng, 8);
    auto ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const auto sa = score_spans(a, w), sb = score_spans(b, w), sab = score_spans(ab, w);
    c.expect(sab == sa + sb, "additivity");
    c.expect(sab.micro_points <= sa.micro_points && sab.micro_points <= sb.micro_points, "monotonicity");
    c.expect(sa.micro_points == oracle::mqm_micro_points(a, w), "oracle");
    const auto k = static_cast<std::int64_t>(1 + rng.below(9));
    c.expect(score_spans(a, w.scaled(static_cast<double>(k))).micro_points == k * sa.micro_points, "linearity");
  }
  c.note("10000 annotations");
}

void meta_oracles(Checks& c) {
  SplitMix64 rng(3003);
  int spa_n = 0, tie_n = 0, tau_n = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const std::size_t n = 2 + rng.below(4);
    const std::size_t items = 1 + rng.below(20);
    const auto h = testing::random_matrix(rng, n, items, {0, -1, -2, -5, -6, -25}, 0.1);
    const auto m = testing::random_matrix(rng, n, items, {0, -0.5, -1.5, -3, -7.25, -10}, 0.1);
    const std::uint64_t seed = rng.next();
    const ScoreMatrix both[] = {h, m};
    const auto al = align(both);

    const auto want = al[0].num_systems() >= 2 ? oracle::spa(al[0], al[1], 1000, seed) : std::nullopt;
    try {
      const double got = soft_pairwise_accuracy(h, m, {1000, seed, 1});
      c.expect(want && got == *want, "spa instance " + std::to_string(inst));
      ++spa_n;
    } catch (const PreconditionError&) {
      c.expect(!want, "spa undefined mismatch " + std::to_string(inst));
    }

    const auto pairs = item_pairs(al[0], al[1]);
    const auto ops = oracle::pairs_of(al[0], al[1]);
    c.expect(pairs.size() == ops.size(), "pair count");
    if (!pairs.empty()) {
      const auto got = tie_calibrated_accuracy(pairs);
      const auto [acc, eps] = oracle::tie_calibrated(ops);
      c.expect(got.accuracy == acc && got.epsilon == eps, "tie calibration " + std::to_string(inst));
      ++tie_n;
    }

    std::vector<double> x, y;
    for (std::size_t s = 0; s < al[0].num_systems(); ++s)
      for (std::size_t t = 0; t < al[0].num_items(); ++t)
        if (al[0].at(s, t)) {
          x.push_back(*al[0].at(s, t));
          y.push_back(*al[1].at(s, t));
        }
    if (x.size() >= 2) {
      const double want_tau = oracle::kendall_tau_b(x, y);
      try {
        c.expect(kendall_tau_b(x, y) == want_tau, "tau " + std::to_string(inst));
        ++tau_n;
      } catch (const UndefinedStatistic&) {
        c.expect(!std::isfinite(want_tau), "tau undefined mismatch " + std::to_string(inst));
      }
    }
  }
  c.note("spa " + std::to_string(spa_n) + ", tie " + std::to_string(tie_n) + ", tau " + std::to_string(tau_n) +
         " defined of 500");
}

void constant_metric(Checks& c) {
  // Two systems over 1000 items; humans tie on 435 of them.
  std::vector<ItemPair> pairs;
  for (int i = 0; i < 1000; ++i) pairs.push_back({-1.0, i < 435 ? -1.0 : -2.0 - (i % 3), -3.0, -3.0});
  const auto r = tie_calibrated_accuracy(pairs);
  c.expect(r.accuracy == 0.435, "Acc*_eq " + fmt_double(r.accuracy));
  c.note("Acc*_eq=" + fmt_double(100 * r.accuracy) + "%");
}

double ks_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    d = std::max({d, static_cast<double>(i + 1) / n - p[i], p[i] - static_cast<double>(i) / n});
  return d;
}

ScoreMatrix continuous(SplitMix64& rng, std::size_t systems, std::size_t items) {
  auto m = testing::random_matrix(rng, systems, items, {0.0}, 0.0);
  for (std::size_t s = 0; s < systems; ++s)
    for (std::size_t t = 0; t < items; ++t) m.set(s, t, -25.0 * rng.uniform());
  return m;
}

void significance_null(Checks& c) {
  std::vector<double> ps;
  for (int trial = 0; trial < 200; ++trial) {
    SplitMix64 rng(derive_seed(5005, "trial/" + std::to_string(trial)));
    const auto h = continuous(rng, 5, 40);
    const auto a = continuous(rng, 5, 40);
    const auto b = continuous(rng, 5, 40);
    SignificanceConfig cfg;
    cfg.test = {1000, rng.next(), 1};
    ps.push_back(metric_significance(a, b, h, MetaMetric::AccEq, cfg).p_two_sided);
  }
  const double ks = ks_uniform(ps);
  c.expect(ks <= 0.12, "KS " + fmt_double(ks));
  c.note("KS=" + fmt_double(ks) + " over 200 trials (Acc*_eq, 5x40)");

  SplitMix64 rng(5006);
  const auto h = testing::random_matrix(rng, 4, 15, {0, -1, -5}, 0.0);
  const auto m = testing::random_matrix(rng, 4, 15, {0, -1, -2, -3}, 0.0);
  for (MetaMetric meta : {MetaMetric::Spa, MetaMetric::AccEq, MetaMetric::Pearson, MetaMetric::Kendall}) {
    SignificanceConfig cfg;
    cfg.test = {1000, 9, 1};
    cfg.spa_inner_resamples = 50;
    const auto r = metric_significance(m, m, h, meta, cfg);
    c.expect(r.p_two_sided == 1.0 && r.p_a_better == 1.0 && r.p_b_better == 1.0,
             "self-comparison " + std::string(to_string(meta)));
  }
  c.note("self-comparison p=1");
}

void parser(Checks& c) {
  const auto cases = testing::load_golden(testing::data_dir() / "golden/parser");
  c.expect(cases.size() >= 30, "corpus size " + std::to_string(cases.size()));
  for (const auto& g : cases) {
    const auto why = testing::check_golden(g);
    c.expect(why.empty(), g.name + ": " + why);
  }
  SplitMix64 rng(6006);
  for (int i = 0; i < 10000; ++i) {
    const auto spans = testing::random_spans(rng, 8);
    std::vector<ErrorSpan> expected;
    for (Severity s : {Severity::Critical, Severity::Major, Severity::Minor})
      for (const auto& sp : spans)
        if (sp.severity == s) expected.push_back(sp);
    try {
      c.expect(parse_error_spans(format_error_blocks(spans), Strictness::Strict).annotation.spans == expected,
               "round trip " + std::to_string(i));
    } catch (const Error& e) {
      c.expect(false, std::string("round trip threw: ") + e.what());
    }
  }
  c.note(std::to_string(cases.size()) + " golden cases, 10000 round trips");
}

void trajectories(Checks& c) {
  const auto w = WeightScheme::standard();
  SplitMix64 rng(7007);
  std::vector<Segment> segs;
  std::vector<ErrorAnnotation> anns;
  for (int i = 0; i < 10000; ++i) {
    const SegmentKey key{i % 2 ? "en-de" : "zh-en", "sys" + std::to_string(i % 4), "doc" + std::to_string(i % 7), i};
    segs.push_back(testing::random_segment(rng, key, true));
    anns.push_back({key, "rater1", testing::random_spans(rng, 8)});
  }
  std::size_t violations = 0, n = 0;
  for (MaterialsMode mode : {MaterialsMode::Src, MaterialsMode::Ref}) {
    const auto ds = synthesize_dataset(segs, anns, w, mode);
    for (const auto& t : ds.instances) violations += validate_instance(t, w).size();
    n += ds.instances.size();
    const auto again = synthesize_dataset(segs, anns, w, mode);
    c.expect(again.instances == ds.instances, "synthesis determinism");
  }
  c.expect(n == 20000, "instances " + std::to_string(n));
  c.expect(violations == 0, "violations " + std::to_string(violations));

  std::vector<TrainingInstance> data;
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < (g ? 5980 : 9000); ++i) {
      TrainingInstance t;
      t.lang_pair = g ? "zh-en" : "en-de";
      t.prompt = t.lang_pair + std::to_string(i);
      data.push_back(t);
    }
  const auto b = balance_dataset(data, std::nullopt, 77);
  c.expect(b.instances.size() == 11960, "balanced " + std::to_string(b.instances.size()));
  c.expect(balance_dataset(data, std::nullopt, 77).instances == b.instances, "balance determinism");
  c.note(std::to_string(n) + " instances, " + std::to_string(violations) + " violations, balanced " +
         std::to_string(b.instances.size()));
}

std::vector<PromptJob> jobs(int n) {
  std::vector<PromptJob> out;
  for (int i = 0; i < n; ++i) {
    PromptJob j;
    j.key = {"en-de", "sys" + std::to_string(i % 3), "doc", i};
    j.prompt.text = "prompt " + std::to_string(i);
    j.prompt.fingerprint = "fp" + std::to_string(1000 + i);
    j.prompt.template_id = "t";
    out.push_back(j);
  }
  return out;
}

void judge_client(Checks& c) {
  const auto dir = testing::scratch_dir("acceptance_judge");
  {
    testing::StubServer server([](const std::string&, int) { return testing::StubServer::Reply{}; },
                               std::chrono::milliseconds(20));
    EndpointConfig ep;
    ep.url = server.url();
    ep.model = "m";
    ep.parallelism = 4;
    const auto factory = [ep] { return make_http_transport(ep); };
    const auto js = jobs(40);
    const auto r = run_batch(js, ep, {}, {dir / "cap.jsonl"}, factory);
    c.expect(r.issued == 40, "issued " + std::to_string(r.issued));
    c.expect(server.max_in_flight() <= 4, "in flight " + std::to_string(server.max_in_flight()));
    c.note("max in flight " + std::to_string(server.max_in_flight()) + "/4");
  }
  {
    // 429 three times, then success; then a persistently failing server.
    testing::StubServer server([](const std::string& prompt, int seen) {
      if (prompt == "prompt 0" && seen < 3) return testing::StubServer::Reply{429, "slow down"};
      if (prompt == "prompt 1") return testing::StubServer::Reply{503, "down"};
      return testing::StubServer::Reply{};
    });
    EndpointConfig ep;
    ep.url = server.url();
    ep.model = "m";
    const auto schedule = backoff_schedule_ms(ep);
    std::mutex mu;
    std::vector<std::int64_t> delays;
    const Sleeper sleeper = [&](std::chrono::milliseconds d) {
      const std::lock_guard lock(mu);
      delays.push_back(d.count());
    };
    const auto js = jobs(2);
    auto transport = make_http_transport(ep);
    const auto ok = request_judgment(js[0], ep, {}, *transport, sleeper);
    c.expect(!ok.failed && ok.attempts.size() == 4, "429 retries");
    c.expect(delays == std::vector<std::int64_t>(schedule.begin(), schedule.begin() + 3), "429 delays");
    delays.clear();
    const auto bad = request_judgment(js[1], ep, {}, *transport, sleeper);
    c.expect(bad.failed && bad.attempts.size() == schedule.size() + 1, "terminal attempts");
    c.expect(delays == schedule, "terminal delays");
    c.note("backoff " + std::to_string(schedule.size()) + " delays followed");
  }
  {
    testing::StubServer server([](const std::string&, int) { return testing::StubServer::Reply{}; });
    EndpointConfig ep;
    ep.url = server.url();
    ep.model = "m";
    ep.parallelism = 3;
    const auto factory = [ep] { return make_http_transport(ep); };
    const auto js = jobs(20);
    const auto out = dir / "resume.jsonl";
    std::filesystem::remove(out);
    run_batch(std::span(js).first(7), ep, {}, {out}, factory);
    {
      std::ofstream torn(out, std::ios::app);
      torn << "{\"seg\":{\"lang";
    }
    const auto r = run_batch(js, ep, {}, {out}, factory);
    const auto again = run_batch(js, ep, {}, {out}, factory);
    const auto seen = server.prompts_seen();
    const std::set<std::string> unique(seen.begin(), seen.end());
    c.expect(r.resumed == 7 && r.issued == 13, "partial resume");
    c.expect(again.issued == 0, "full resume issued " + std::to_string(again.issued));
    c.expect(unique.size() == seen.size() && seen.size() == 20, "duplicates: " + std::to_string(seen.size()));
    c.expect(load_batch_records(out, nullptr).size() == 20, "records");
    c.note(std::to_string(seen.size() - unique.size()) + " duplicate requests");
  }
}

json lang_entry(const std::string& report) {
  const auto j = json::parse(report);
  return j.at("reports")[0].at("per_language").at("en-de");
}

void end_to_end(Checks& c) {
  const auto a = testing::run_pipeline(testing::scratch_dir("acceptance_e2e_a"), "20261014");
  const auto b = testing::run_pipeline(testing::scratch_dir("acceptance_e2e_b"), "20261014");
  c.expect(a.rc == 0 && b.rc == 0, "pipeline exit codes");
  if (a.rc || b.rc) return;
  c.expect(a.report == b.report, "reports differ");
  const auto de = lang_entry(a.report);
  c.expect(de.at("n_systems") == 3 && de.at("n_items") == 50, "fixture shape");

  const auto dir = a.metric_scores.parent_path();
  const auto shifted = dir / "affine.jsonl";
  testing::affine_scores(a.metric_scores, shifted, 2.5, 7.0);
  const int rc = testing::run_cli({"metaeval", "--human", a.human_scores.string(), "--metric", shifted.string(),
                                   "--label", "judge", "--seed", "20261014", "--resamples", "1000", "--out",
                                   (dir / "affine_report.json").string()});
  c.expect(rc == 0, "affine metaeval exit code");
  if (rc) return;
  const auto af = lang_entry(read_text_file(dir / "affine_report.json"));
  for (const char* field : {"spa", "acc_eq_star", "kendall"})
    c.expect(de.at(field) == af.at(field), std::string("affine ") + field);
  c.expect(testing::ranking(a.metric_scores).front() == testing::ranking(shifted).front(), "argmax system");
  c.note("report " + std::to_string(a.report.size()) + " bytes identical, spa=" + de.at("spa").dump() +
         " acc_eq*=" + de.at("acc_eq_star").dump() + " tau=" + de.at("kendall").dump());
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "shapley attribution", 1.0, shapley},
      {2, "mqm rubric", 5.0, mqm},
      {3, "meta-metric oracles", 30.0, meta_oracles},
      {4, "constant metric Acc*_eq", 1.0, constant_metric},
      {5, "significance calibration", 120.0, significance_null},
      {6, "parser golden corpus", 10.0, parser},
      {7, "trajectory factory", 20.0, trajectories},
      {8, "judge client", 30.0, judge_client},
      {9, "end-to-end determinism", 60.0, end_to_end},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Checks checks;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(checks);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("uncaught: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    checks.expect(secs < cr.limit_s, "runtime " + fmt_double(secs) + " s");
    const bool ok = checks.ok();
    if (!ok) ++failed;
    std::printf("%s %d %s: %s (%.3f s, limit %.0f s)\n", ok ? "PASS" : "FAIL", cr.id, cr.name.c_str(),
                checks.summary().c_str(), secs, cr.limit_s);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
