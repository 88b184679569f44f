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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mqmkit/data_model.hpp"
#include "mqmkit/error.hpp"

namespace mqmkit {

struct ThinkSplit {
  std::optional<std::string> think;
  std::string answer;
  bool truncated = false;  // an opening delimiter was never closed

  bool operator==(const ThinkSplit&) const = default;
};

// Separates a reasoning block from the final answer. Recognizes
// <think>...</think>, a bare closing tag (servers that put the opening tag in
// the prompt), and an unterminated opening tag. Never throws.
ThinkSplit split_think_answer(std::string_view raw);

enum class Strictness { Strict, Lenient };

struct ParseOptions {
  // When set, every span must occur verbatim in this text.
  std::optional<std::string> hypothesis;
};

struct ParsedJudgment {
  ErrorAnnotation annotation;
  std::vector<std::string> parse_warnings;  // always empty under Strict
  Strictness strictness = Strictness::Lenient;
  std::vector<Severity> block_order;  // headers in order of appearance
};

// Reads the Critical/Major/Minor block format. Throws ParseError when no
// block header exists, and under Strict for any line it cannot interpret.
ParsedJudgment parse_error_spans(std::string_view answer, Strictness strictness,
                                 const ParseOptions& options = {});

enum class ScoreScale { Mqm, Esa0to100 };

class ScoreRangeError : public ParseError {
 public:
  ScoreRangeError(const std::string& what, std::string raw_match)
      : ParseError(what), raw_match_(std::move(raw_match)) {}
  const std::string& raw_match() const { return raw_match_; }

 private:
  std::string raw_match_;
};

// Last number following a "Score" marker ("Score:", "Score (0-100):").
// Mqm scores must be <= 0, Esa scores within [0, 100].
double parse_direct_score(std::string_view answer, ScoreScale scale);

struct BlockLayout {
  bool blank_line_between_blocks = false;
};

// Renders spans as the Critical/Major/Minor block text that
// parse_error_spans reads back; empty blocks say "no-error". Span order within
// a severity is preserved.
std::string format_error_blocks(std::span<const ErrorSpan> spans, BlockLayout layout = {});

// One span line: category - "span".
std::string format_span_line(const ErrorSpan& span);

}  // namespace mqmkit
