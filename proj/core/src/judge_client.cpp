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

#include "mqmkit/judge_client.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "mqmkit/error.hpp"
#include "mqmkit/io.hpp"
#include "mqmkit/judge_parser.hpp"
#include "mqmkit/text.hpp"

namespace mqmkit {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw UsageError("endpoint url '" + url + "' has no scheme");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw UsageError("endpoint url '" + url + "' must use http or https");
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  p.origin = url.substr(0, path_start);
  p.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (p.origin.size() <= scheme_end + 3) throw UsageError("endpoint url '" + url + "' has no host");
  return p;
}

std::vector<std::pair<std::string, std::string>> auth_headers(const EndpointConfig& ep) {
  std::vector<std::pair<std::string, std::string>> h;
  if (ep.token_env.empty()) return h;
  const char* token = std::getenv(ep.token_env.c_str());
  if (token == nullptr || *token == '\0')
    throw UsageError("environment variable " + ep.token_env + " (endpoint token) is not set");
  h.emplace_back("Authorization", std::string("Bearer ") + token);
  return h;
}

bool retryable(const HttpResponse& r) { return r.status == 0 || r.status == 429 || r.status >= 500; }

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 300;
  std::string s(body.substr(0, kMax));
  if (body.size() > kMax) s += "...";
  return s;
}

class HttplibTransport : public Transport {
 public:
  explicit HttplibTransport(const EndpointConfig& ep) : url_(parse_url(ep.url)), client_(url_.origin) {
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(ep.timeout_s));
    client_.set_connection_timeout(timeout);
    client_.set_read_timeout(timeout);
    client_.set_write_timeout(timeout);
  }

  HttpResponse post(const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers) override {
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client_.Post(url_.path, h, body, "application/json");
    HttpResponse out;
    if (!res) {
      const auto err = res.error();
      out.transport_error = httplib::to_string(err);
      out.timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

 private:
  ParsedUrl url_;
  httplib::Client client_;
};

bool record_before(const JudgeRecord& a, const JudgeRecord& b) {
  return std::tie(a.key, a.fingerprint) < std::tie(b.key, b.fingerprint);
}

std::string record_line(const JudgeRecord& r) { return to_json(r).dump() + "\n"; }

}  // namespace

void EndpointConfig::validate() const {
  if (url.empty()) throw UsageError("endpoint.url is required");
  parse_url(url);
  if (model.empty()) throw UsageError("endpoint.model is required");
  if (!(timeout_s > 0.0)) throw UsageError("endpoint.timeout must be positive");
  if (max_retries < 0) throw UsageError("endpoint.max_retries must be >= 0");
  if (parallelism < 1) throw UsageError("endpoint.parallelism must be >= 1");
  if (!(backoff_base_s >= 0.0) || !(backoff_max_s >= 0.0) || !(backoff_total_s >= 0.0))
    throw UsageError("endpoint backoff settings must be >= 0");
}

void DecodeParams::validate() const {
  if (!(temperature >= 0.0)) throw UsageError("decode.temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw UsageError("decode.top_p must be in (0, 1]");
  if (top_k < 0) throw UsageError("decode.top_k must be >= 0");
  if (max_tokens < 1) throw UsageError("decode.max_tokens must be >= 1");
}

std::unique_ptr<Transport> make_http_transport(const EndpointConfig& ep) {
  return std::make_unique<HttplibTransport>(ep);
}

void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

json build_request_body(const RenderedPrompt& prompt, const EndpointConfig& ep, const DecodeParams& dp) {
  json body = {
      {"model", ep.model},
      {"messages", json::array({{{"role", "user"}, {"content", prompt.text}}})},
      {"temperature", dp.temperature},
      {"top_p", dp.top_p},
      {"max_tokens", dp.max_tokens},
  };
  if (ep.send_top_k) body["top_k"] = dp.top_k;
  return body;
}

std::vector<std::int64_t> backoff_schedule_ms(const EndpointConfig& ep) {
  std::vector<std::int64_t> out;
  const auto total_ms = static_cast<std::int64_t>(std::llround(ep.backoff_total_s * 1000.0));
  const auto max_ms = static_cast<std::int64_t>(std::llround(ep.backoff_max_s * 1000.0));
  std::int64_t sum = 0;
  for (int r = 1; r <= ep.max_retries; ++r) {
    const double raw = ep.backoff_base_s * 1000.0 * std::ldexp(1.0, r - 1);
    const std::int64_t d = std::min<std::int64_t>(max_ms, static_cast<std::int64_t>(std::llround(std::min(raw, 9e15))));
    if (sum + d > total_ms) break;
    sum += d;
    out.push_back(d);
  }
  return out;
}

void apply_completion(const json& response, const EndpointConfig& ep, JudgeRecord& record) {
  if (!response.is_object() || !response.contains("choices") || !response.at("choices").is_array() ||
      response.at("choices").empty())
    throw DataError("response has no choices");
  const json& choice = response.at("choices").at(0);
  const json& message = choice.contains("message") ? choice.at("message") : choice;

  std::string content;
  if (message.contains("content") && message.at("content").is_string()) content = message.at("content");
  else if (choice.contains("text") && choice.at("text").is_string()) content = choice.at("text");

  std::vector<std::string> reasoning;
  for (const auto& field : ep.reasoning_fields) {
    if (message.contains(field) && message.at(field).is_string()) {
      const std::string r = message.at(field);
      if (!text::trim(r).empty()) reasoning.push_back(r);
    }
  }
  if (!reasoning.empty() && content.find("</think>") == std::string::npos)
    record.raw_completion = "<think>\n" + text::join(reasoning, "\n") + "\n</think>\n\n" + content;
  else
    record.raw_completion = content;

  const ThinkSplit split = split_think_answer(record.raw_completion);
  record.think = split.think;
  record.answer = split.answer;
  record.truncated = split.truncated;
  if (choice.contains("finish_reason") && choice.at("finish_reason").is_string() &&
      choice.at("finish_reason").get<std::string>() == "length")
    record.truncated = true;

  if (response.contains("usage") && response.at("usage").is_object()) {
    const json& u = response.at("usage");
    const auto int_field = [](const json& o, const char* name) -> std::optional<std::int64_t> {
      if (o.contains(name) && o.at(name).is_number_integer()) return o.at(name).get<std::int64_t>();
      return std::nullopt;
    };
    TokenUsage usage;
    usage.prompt_tokens = int_field(u, "prompt_tokens");
    usage.completion_tokens = int_field(u, "completion_tokens");
    usage.reasoning_tokens = int_field(u, "reasoning_tokens");
    if (!usage.reasoning_tokens && u.contains("completion_tokens_details") &&
        u.at("completion_tokens_details").is_object())
      usage.reasoning_tokens = int_field(u.at("completion_tokens_details"), "reasoning_tokens");
    record.usage = usage;
  }
}

JudgeRecord request_judgment(const PromptJob& job, const EndpointConfig& ep, const DecodeParams& dp,
                             Transport& transport, const Sleeper& sleep) {
  JudgeRecord record;
  record.key = job.key;
  record.fingerprint = job.prompt.fingerprint;

  const auto headers = auth_headers(ep);
  const std::string body = build_request_body(job.prompt, ep, dp).dump();
  const auto schedule = backoff_schedule_ms(ep);

  for (std::size_t attempt = 0;; ++attempt) {
    AttemptInfo info;
    if (attempt > 0) {
      info.delay_before_ms = schedule[attempt - 1];
      sleep(std::chrono::milliseconds(info.delay_before_ms));
    }
    const HttpResponse res = transport.post(body, headers);
    info.status = res.status;
    if (res.status == 0) info.error = res.timed_out ? "timeout: " + res.transport_error : res.transport_error;
    else if (res.status < 200 || res.status >= 300) info.error = "HTTP " + std::to_string(res.status) + ": " + excerpt(res.body);
    record.attempts.push_back(info);

    if (res.status >= 200 && res.status < 300) {
      try {
        apply_completion(json::parse(res.body), ep, record);
        return record;
      } catch (const std::exception& e) {
        record.attempts.back().error = std::string("malformed response: ") + e.what();
        record.failed = true;
        record.error = record.attempts.back().error;
        return record;
      }
    }
    if (!retryable(res) || attempt >= schedule.size()) {
      record.failed = true;
      record.error = info.error + " (after " + std::to_string(attempt + 1) + " attempt" + (attempt ? "s" : "") + ")";
      return record;
    }
  }
}

std::vector<JudgeRecord> load_batch_records(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::vector<JudgeRecord> out;
  if (!std::filesystem::exists(path)) return out;
  std::istringstream in(read_text_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!text::trim(line).empty()) lines.push_back(line);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(judge_record_from_json(json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (i + 1 == lines.size()) {
        if (warnings) warnings->push_back(path.string() + ": ignoring incomplete final line");
        break;
      }
      throw DataError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

BatchResult run_batch(std::span<const PromptJob> jobs, const EndpointConfig& ep, const DecodeParams& dp,
                      const BatchOptions& options, const TransportFactory& transports, const Sleeper& sleep) {
  ep.validate();
  dp.validate();
  auth_headers(ep);

  BatchResult result;
  if (!ep.send_top_k) result.warnings.push_back("top_k is not sent to this endpoint");

  // Existing records; a successful record wins over a failure for the same
  // fingerprint, otherwise the first one is kept.
  std::map<std::string, JudgeRecord> kept;
  for (auto& r : load_batch_records(options.output, &result.warnings)) {
    if (options.retry_failed && r.failed) continue;
    auto it = kept.find(r.fingerprint);
    if (it == kept.end()) kept.emplace(r.fingerprint, std::move(r));
    else if (it->second.failed && !r.failed) it->second = std::move(r);
  }

  std::set<std::string> seen;
  std::vector<const PromptJob*> pending;
  for (const auto& job : jobs) {
    if (!seen.insert(job.prompt.fingerprint).second) continue;
    ++result.requested;
    if (kept.count(job.prompt.fingerprint)) ++result.resumed;
    else pending.push_back(&job);
  }

  if (!pending.empty()) {
    if (options.output.has_parent_path()) std::filesystem::create_directories(options.output.parent_path());
    std::ofstream out(options.output, std::ios::app | std::ios::binary);
    if (!out) throw DataError("cannot append to " + options.output.string());

    std::mutex writer;
    std::vector<JudgeRecord> fresh;
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
      std::unique_ptr<Transport> transport;
      std::string setup_error;
      try {
        transport = transports();
      } catch (const std::exception& e) {
        setup_error = e.what();
      }
      for (std::size_t i = next++; i < pending.size(); i = next++) {
        const PromptJob& job = *pending[i];
        JudgeRecord rec;
        if (transport) {
          try {
            rec = request_judgment(job, ep, dp, *transport, sleep);
          } catch (const std::exception& e) {
            rec.failed = true;
            rec.error = e.what();
          }
        } else {
          rec.failed = true;
          rec.error = "transport setup failed: " + setup_error;
        }
        rec.key = job.key;
        rec.fingerprint = job.prompt.fingerprint;
        const std::lock_guard lock(writer);
        out << record_line(rec);
        out.flush();
        fresh.push_back(std::move(rec));
      }
    };

    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(ep.parallelism), pending.size());
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    out.close();

    result.issued = static_cast<std::int64_t>(fresh.size());
    for (auto& r : fresh) {
      if (r.failed) ++result.failed;
      kept.insert_or_assign(r.fingerprint, std::move(r));
    }
  }

  std::vector<JudgeRecord> all;
  all.reserve(kept.size());
  for (auto& [fp, r] : kept) all.push_back(std::move(r));
  std::sort(all.begin(), all.end(), record_before);
  std::string content;
  for (const auto& r : all) content += record_line(r);
  const std::filesystem::path tmp = options.output.string() + ".tmp";
  write_text_file(tmp, content);
  std::filesystem::rename(tmp, options.output);
  return result;
}

}  // namespace mqmkit
