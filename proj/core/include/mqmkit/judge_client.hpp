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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mqmkit/data_model.hpp"
#include "mqmkit/prompt_kit.hpp"

namespace mqmkit {

struct EndpointConfig {
  std::string url;  // full chat-completions URL, http:// or https://
  std::string model;
  std::string token_env;  // name of the variable holding the bearer token
  double timeout_s = 300.0;
  int max_retries = 4;
  int parallelism = 4;
  double backoff_base_s = 1.0;
  double backoff_max_s = 30.0;
  double backoff_total_s = 120.0;  // ceiling on the summed retry delays
  bool send_top_k = true;
  // Message fields that may carry reasoning text, concatenated in order.
  std::vector<std::string> reasoning_fields = {"reasoning_content", "reasoning"};

  // Throws UsageError naming the offending field.
  void validate() const;
};

struct DecodeParams {
  double temperature = 0.6;
  double top_p = 0.95;
  int top_k = 20;
  int max_tokens = 8192;

  void validate() const;
};

struct PromptJob {
  SegmentKey key;
  RenderedPrompt prompt;
};

struct HttpResponse {
  int status = 0;  // 0 when no response arrived
  std::string body;
  std::string transport_error;
  bool timed_out = false;
};

// Sends one POST to the configured endpoint. Implementations need not be
// thread-safe; run_batch creates one per worker.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers) = 0;
};

using TransportFactory = std::function<std::unique_ptr<Transport>()>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

std::unique_ptr<Transport> make_http_transport(const EndpointConfig& ep);
void real_sleep(std::chrono::milliseconds d);

nlohmann::json build_request_body(const RenderedPrompt& prompt, const EndpointConfig& ep, const DecodeParams& dp);

// Delays before retries 1..n: base * 2^(r-1) capped at backoff_max, cut off
// where the running total would pass backoff_total.
std::vector<std::int64_t> backoff_schedule_ms(const EndpointConfig& ep);

// Reads an OpenAI-style response body into `record` (completion, think
// split, usage, truncation).
void apply_completion(const nlohmann::json& response, const EndpointConfig& ep, JudgeRecord& record);

// Never throws for endpoint trouble: terminal failures come back as a record
// with failed = true and every attempt listed.
JudgeRecord request_judgment(const PromptJob& job, const EndpointConfig& ep, const DecodeParams& dp,
                             Transport& transport, const Sleeper& sleep = real_sleep);

struct BatchOptions {
  std::filesystem::path output;  // also the resume file
  bool retry_failed = false;     // re-dispatch failure records found on resume
};

struct BatchResult {
  std::int64_t requested = 0;  // distinct fingerprints asked for
  std::int64_t resumed = 0;    // already present in the output file
  std::int64_t issued = 0;
  std::int64_t failed = 0;
  std::vector<std::string> warnings;
};

// Dispatches jobs whose fingerprint is not in the output file, at most
// ep.parallelism at a time, appending each record as it completes. The file
// is finally rewritten sorted by (segment key, fingerprint).
BatchResult run_batch(std::span<const PromptJob> jobs, const EndpointConfig& ep, const DecodeParams& dp,
                      const BatchOptions& options, const TransportFactory& transports,
                      const Sleeper& sleep = real_sleep);

// Records of a batch output file. A torn final line (interrupted write) is
// skipped with a warning; other malformed lines throw DataError.
std::vector<JudgeRecord> load_batch_records(const std::filesystem::path& path, std::vector<std::string>* warnings);

}  // namespace mqmkit
