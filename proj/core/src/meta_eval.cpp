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

#include "mqmkit/meta_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "mqmkit/hashing.hpp"
#include "mqmkit/text.hpp"

namespace mqmkit {

void TestConfig::validate() const {
  if (resamples < 1) throw UsageError("resamples must be >= 1");
  if (threads < 1) throw UsageError("threads must be >= 1");
}

namespace {

// Runs fn(index) for index in [0, n) over up to `threads` workers. Each index
// writes only its own output slot.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned workers = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
}

double p_from_count(std::int64_t count, int resamples) {
  return static_cast<double>(1 + count) / static_cast<double>(resamples + 1);
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double sign_flip_p_value(std::span<const double> a, std::span<const double> b, int resamples,
                         std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
  if (a.size() != b.size()) throw DataError("paired scores differ in length");
  if (a.empty()) throw PreconditionError("paired test needs at least one item");
  if (resamples < 1) throw UsageError("resamples must be >= 1");

  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t t = 0; t < n; ++t) diff[t] = a[t] - b[t];
  const double observed = mean_of(diff);
  const auto denom = static_cast<double>(n);

  std::int64_t count = 0;
  const std::size_t blocks = (n + 63) / 64;
  for (int k = 0; k < resamples; ++k) {
    double sum = 0.0;
    for (std::size_t blk = 0; blk < blocks; ++blk) {
      std::uint64_t word = resample_word(seed, i, j, static_cast<std::uint64_t>(k), blk);
      const std::size_t end = std::min(n, (blk + 1) * 64);
      for (std::size_t t = blk * 64; t < end; ++t, word >>= 1) sum += (word & 1U) ? -diff[t] : diff[t];
    }
    if (sum / denom >= observed) ++count;
  }
  return p_from_count(count, resamples);
}

double pairwise_p_value(const KeyedScores& a, const KeyedScores& b, const TestConfig& cfg, std::uint64_t i,
                        std::uint64_t j) {
  cfg.validate();
  if (a.items.size() != a.values.size() || b.items.size() != b.values.size())
    throw DataError("keyed scores have mismatched key and value counts");
  if (a.items != b.items) throw DataError("paired scores are not aligned on identical item keys");
  return sign_flip_p_value(a.values, b.values, cfg.resamples, cfg.seed, i, j);
}

PairwisePValueMatrix pairwise_p_values(const ScoreMatrix& m, const TestConfig& cfg) {
  cfg.validate();
  const std::size_t n = m.num_systems();
  PairwisePValueMatrix out;
  out.systems = m.systems();
  out.p.assign(n * n, std::nullopt);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  parallel_for(pairs.size(), cfg.threads, [&](std::size_t idx) {
    const auto [i, j] = pairs[idx];
    std::vector<double> a, b;
    for (std::size_t t = 0; t < m.num_items(); ++t) {
      const auto x = m.at(i, t);
      const auto y = m.at(j, t);
      if (x && y) {
        a.push_back(*x);
        b.push_back(*y);
      }
    }
    if (a.empty()) return;
    out.p[i * n + j] = sign_flip_p_value(a, b, cfg.resamples, cfg.seed, i, j);
  });
  return out;
}

double soft_pairwise_accuracy(const PairwisePValueMatrix& human, const PairwisePValueMatrix& metric) {
  if (human.systems != metric.systems) throw DataError("p-value matrices cover different systems");
  const std::size_t n = human.size();
  if (n < 2) throw PreconditionError("soft pairwise accuracy needs at least two systems");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto ph = human.at(i, j);
      const auto pm = metric.at(i, j);
      if (!ph || !pm) continue;
      sum += 1.0 - std::abs(*ph - *pm);
      ++pairs;
    }
  }
  if (pairs == 0) throw PreconditionError("no system pair shares a scored item");
  return sum / static_cast<double>(pairs);
}

double soft_pairwise_accuracy(const ScoreMatrix& human, const ScoreMatrix& metric, const TestConfig& cfg) {
  const ScoreMatrix both[] = {human, metric};
  const auto aligned = align(both);
  if (aligned[0].num_systems() < 2) throw PreconditionError("soft pairwise accuracy needs at least two systems");
  return soft_pairwise_accuracy(pairwise_p_values(aligned[0], cfg), pairwise_p_values(aligned[1], cfg));
}

std::vector<ItemPair> item_pairs(const ScoreMatrix& human, const ScoreMatrix& metric) {
  if (human.systems() != metric.systems() || human.items() != metric.items())
    throw DataError("item pairs need aligned matrices");
  std::vector<ItemPair> out;
  const std::size_t n = human.num_systems();
  for (std::size_t t = 0; t < human.num_items(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto hi = human.at(i, t);
      const auto mi = metric.at(i, t);
      if (!hi || !mi) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto hj = human.at(j, t);
        const auto mj = metric.at(j, t);
        if (!hj || !mj) continue;
        out.push_back({*hi, *hj, *mi, *mj});
      }
    }
  }
  return out;
}

namespace {

int sign(double x) { return (x > 0.0) - (x < 0.0); }

bool agrees(const ItemPair& p, double epsilon) {
  const bool human_tie = p.human_a == p.human_b;
  if (std::abs(p.metric_a - p.metric_b) <= epsilon) return human_tie;
  return !human_tie && sign(p.human_a - p.human_b) == sign(p.metric_a - p.metric_b);
}

}  // namespace

double pairwise_accuracy_at(std::span<const ItemPair> pairs, double epsilon) {
  if (pairs.empty()) throw PreconditionError("pairwise accuracy needs at least one pair");
  std::size_t hits = 0;
  for (const auto& p : pairs) hits += agrees(p, epsilon) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

TieCalibration tie_calibrated_accuracy(std::span<const ItemPair> pairs) {
  if (pairs.empty()) throw PreconditionError("tie calibration needs at least one pair");

  struct Entry {
    double gap;
    bool human_tie;
    bool sign_match;  // metric direction equals human direction (non-tie)
  };
  std::vector<Entry> entries;
  entries.reserve(pairs.size());
  for (const auto& p : pairs) {
    const bool tie = p.human_a == p.human_b;
    entries.push_back({std::abs(p.metric_a - p.metric_b), tie,
                       !tie && sign(p.human_a - p.human_b) == sign(p.metric_a - p.metric_b)});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.gap < y.gap; });

  // acc(eps) changes only where eps crosses an observed gap: a pair moves from
  // a directional call to a tie call.
  std::int64_t hits = 0;
  std::size_t idx = 0;
  for (const auto& e : entries) hits += e.gap <= 0.0 ? e.human_tie : e.sign_match;
  while (idx < entries.size() && entries[idx].gap <= 0.0) ++idx;

  std::int64_t best_hits = hits;
  double best_eps = 0.0;
  while (idx < entries.size()) {
    const double eps = entries[idx].gap;
    while (idx < entries.size() && entries[idx].gap == eps) {
      hits += static_cast<std::int64_t>(entries[idx].human_tie) - static_cast<std::int64_t>(entries[idx].sign_match);
      ++idx;
    }
    if (hits > best_hits) {
      best_hits = hits;
      best_eps = eps;
    }
  }
  return {static_cast<double>(best_hits) / static_cast<double>(entries.size()), best_eps, entries.size()};
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("correlation inputs differ in length");
  if (x.size() < 2) throw UndefinedStatistic("correlation needs at least two values");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("correlation undefined for zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

// Merge sort on y counting inversions (pairs with x-order != y-order).
std::int64_t count_swaps(std::vector<double>& y, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = count_swaps(y, buf, lo, mid) + count_swaps(y, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (y[j] < y[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = y[j++];
    } else {
      buf[k++] = y[i++];
    }
  }
  while (i < mid) buf[k++] = y[i++];
  while (j < hi) buf[k++] = y[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            y.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

template <class It, class Eq>
std::int64_t tied_pairs(It begin, It end, Eq eq) {
  std::int64_t total = 0;
  for (It run = begin; run != end;) {
    It next = run;
    while (next != end && eq(*next, *run)) ++next;
    const auto t = static_cast<std::int64_t>(next - run);
    total += t * (t - 1) / 2;
    run = next;
  }
  return total;
}

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("correlation inputs differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw UndefinedStatistic("correlation needs at least two values");

  std::vector<std::pair<double, double>> xy(n);
  for (std::size_t i = 0; i < n; ++i) xy[i] = {x[i], y[i]};
  std::sort(xy.begin(), xy.end());

  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t tx = tied_pairs(xy.begin(), xy.end(), [](const auto& a, const auto& b) { return a.first == b.first; });
  const std::int64_t txy = tied_pairs(xy.begin(), xy.end(), [](const auto& a, const auto& b) { return a == b; });

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = xy[i].second;
  const std::int64_t swaps = count_swaps(ys, buf, 0, n);
  const std::int64_t ty = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

  if (n0 == tx || n0 == ty) throw UndefinedStatistic("correlation undefined for zero-variance input");
  // Concordant minus discordant: untied pairs are n0 - tx - ty + txy; of
  // those, `swaps` are discordant.
  const std::int64_t s = n0 - tx - ty + txy - 2 * swaps;
  return static_cast<double>(s) / std::sqrt(static_cast<double>(n0 - tx) * static_cast<double>(n0 - ty));
}

RankCorrelation rank_correlations(std::span<const double> human_sys, std::span<const double> metric_sys) {
  return {pearson_correlation(human_sys, metric_sys), kendall_tau_b(human_sys, metric_sys)};
}

std::vector<double> system_means(const ScoreMatrix& m) {
  std::vector<double> out(m.num_systems(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t s = 0; s < m.num_systems(); ++s) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < m.num_items(); ++t)
      if (auto v = m.at(s, t)) {
        sum += *v;
        ++count;
      }
    if (count) out[s] = sum / static_cast<double>(count);
  }
  return out;
}

std::string_view to_string(MetaMetric m) {
  switch (m) {
    case MetaMetric::Spa: return "spa";
    case MetaMetric::AccEq: return "acc_eq";
    case MetaMetric::Pearson: return "pearson";
    case MetaMetric::Kendall: return "kendall";
  }
  return "spa";
}

MetaMetric parse_meta_metric(std::string_view text) {
  const std::string t = text::to_lower(text::trim(text));
  if (t == "spa") return MetaMetric::Spa;
  if (t == "acc_eq" || t == "acc-eq" || t == "acceq" || t == "acc_eq_star") return MetaMetric::AccEq;
  if (t == "pearson") return MetaMetric::Pearson;
  if (t == "kendall") return MetaMetric::Kendall;
  throw UsageError("unknown meta-metric '" + std::string(text) + "' (expected spa, acc_eq, pearson, kendall)");
}

std::string_view level_of(MetaMetric m) { return m == MetaMetric::AccEq ? "segment" : "system"; }

double meta_metric_value(MetaMetric meta, const ScoreMatrix& human, const ScoreMatrix& metric,
                         const TestConfig& inner) {
  switch (meta) {
    case MetaMetric::Spa:
      return soft_pairwise_accuracy(pairwise_p_values(human, inner), pairwise_p_values(metric, inner));
    case MetaMetric::AccEq: {
      const auto pairs = item_pairs(human, metric);
      return tie_calibrated_accuracy(pairs).accuracy;
    }
    case MetaMetric::Pearson: return pearson_correlation(system_means(human), system_means(metric));
    case MetaMetric::Kendall: return kendall_tau_b(system_means(human), system_means(metric));
  }
  return 0.0;
}

SignificanceResult metric_significance(const ScoreMatrix& metric_a, const ScoreMatrix& metric_b,
                                       const ScoreMatrix& human, MetaMetric meta, const SignificanceConfig& cfg) {
  cfg.test.validate();
  if (cfg.spa_inner_resamples < 1) throw UsageError("inner resamples must be >= 1");
  const ScoreMatrix all[] = {human, metric_a, metric_b};
  const auto aligned = align(all);
  const ScoreMatrix& h = aligned[0];
  const ScoreMatrix& a = aligned[1];
  const ScoreMatrix& b = aligned[2];
  if (h.count_present() == 0) throw PreconditionError("metrics and human scores share no cells");

  TestConfig inner = cfg.test;
  inner.resamples = cfg.spa_inner_resamples;
  inner.seed = derive_seed(cfg.test.seed, "significance/inner");
  inner.threads = 1;

  SignificanceResult r;
  r.metric_a = meta_metric_value(meta, h, a, inner);
  r.metric_b = meta_metric_value(meta, h, b, inner);
  r.delta = r.metric_a - r.metric_b;
  r.resamples = cfg.test.resamples;

  const std::uint64_t seed = derive_seed(cfg.test.seed, "significance/swap");
  std::vector<double> deltas(static_cast<std::size_t>(cfg.test.resamples));
  parallel_for(deltas.size(), cfg.test.threads, [&](std::size_t k) {
    ScoreMatrix pa = a;
    ScoreMatrix pb = b;
    for (std::size_t t = 0; t < h.num_items(); ++t) {
      if (!resample_bit(seed, 0, 1, k, t)) continue;
      for (std::size_t s = 0; s < h.num_systems(); ++s) {
        pa.set(s, t, b.at(s, t));
        pb.set(s, t, a.at(s, t));
      }
    }
    deltas[k] = meta_metric_value(meta, h, pa, inner) - meta_metric_value(meta, h, pb, inner);
  });

  std::int64_t two = 0, greater = 0, less = 0;
  for (double d : deltas) {
    two += std::abs(d) >= std::abs(r.delta);
    greater += d >= r.delta;
    less += d <= r.delta;
  }
  r.p_two_sided = p_from_count(two, cfg.test.resamples);
  r.p_a_better = p_from_count(greater, cfg.test.resamples);
  r.p_b_better = p_from_count(less, cfg.test.resamples);
  return r;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Win: return "win";
    case Outcome::Tie: return "tie";
    case Outcome::Loss: return "loss";
  }
  return "tie";
}

WinTieLoss win_tie_loss(std::span<const ComparisonSetting> settings, const SignificanceConfig& cfg, double alpha) {
  WinTieLoss out;
  for (const auto& s : settings) {
    SignificanceConfig local = cfg;
    local.test.seed = derive_seed(cfg.test.seed, s.language + "/" + std::string(to_string(s.meta)));
    SettingOutcome o;
    o.language = s.language;
    o.level = std::string(level_of(s.meta));
    o.meta = s.meta;
    o.result = metric_significance(s.metric_a, s.metric_b, s.human, s.meta, local);
    if (o.result.delta > 0.0 && o.result.p_a_better < alpha) o.outcome = Outcome::Win;
    else if (o.result.delta < 0.0 && o.result.p_b_better < alpha) o.outcome = Outcome::Loss;
    else o.outcome = Outcome::Tie;
    switch (o.outcome) {
      case Outcome::Win: ++out.wins; break;
      case Outcome::Tie: ++out.ties; break;
      case Outcome::Loss: ++out.losses; break;
    }
    out.settings.push_back(std::move(o));
  }
  return out;
}

namespace {

std::optional<double> mean_present(const std::vector<std::optional<double>>& v) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& x : v)
    if (x) {
      sum += *x;
      ++n;
    }
  if (!n) return std::nullopt;
  return sum / static_cast<double>(n);
}

template <class Fn>
std::optional<double> try_value(Fn&& fn) {
  try {
    return fn();
  } catch (const UndefinedStatistic&) {
    return std::nullopt;
  } catch (const PreconditionError&) {
    return std::nullopt;
  }
}

}  // namespace

MetaReport meta_evaluate(const ScoreMatrix& human, const ScoreMatrix& metric, const TestConfig& cfg,
                         std::string label) {
  cfg.validate();
  MetaReport report;
  report.label = std::move(label);
  report.resamples = cfg.resamples;
  report.seed = cfg.seed;

  const ScoreMatrix both[] = {human, metric};
  const auto aligned = align(both);

  std::vector<std::optional<double>> spas, accs, pearsons, kendalls;
  for (const auto& lang : aligned[0].lang_pairs()) {
    const ScoreMatrix parts[] = {aligned[0].select_lang_pair(lang), aligned[1].select_lang_pair(lang)};
    const auto lp = align(parts);
    const ScoreMatrix& h = lp[0];
    const ScoreMatrix& m = lp[1];

    MetaScores s;
    s.n_systems = h.num_systems();
    s.n_items = h.num_items();
    TestConfig local = cfg;
    local.seed = hash_combine(cfg.seed, fnv1a64(lang));
    if (h.num_systems() >= 2)
      s.spa = try_value([&] {
        return soft_pairwise_accuracy(pairwise_p_values(h, local), pairwise_p_values(m, local));
      });
    const auto pairs = item_pairs(h, m);
    s.n_pairs = pairs.size();
    if (!pairs.empty()) {
      const auto tc = tie_calibrated_accuracy(pairs);
      s.acc_eq_star = tc.accuracy;
      s.epsilon_star = tc.epsilon;
    }
    const auto hm = system_means(h);
    const auto mm = system_means(m);
    s.pearson = try_value([&] { return pearson_correlation(hm, mm); });
    s.kendall = try_value([&] { return kendall_tau_b(hm, mm); });

    spas.push_back(s.spa);
    accs.push_back(s.acc_eq_star);
    pearsons.push_back(s.pearson);
    kendalls.push_back(s.kendall);
    report.per_language.emplace_back(lang, s);
  }

  report.spa = mean_present(spas);
  report.acc_eq_star = mean_present(accs);
  report.pearson = mean_present(pearsons);
  report.kendall = mean_present(kendalls);
  std::vector<std::optional<double>> all = spas;
  all.insert(all.end(), accs.begin(), accs.end());
  report.avg_all = mean_present(all);
  return report;
}

}  // namespace mqmkit
