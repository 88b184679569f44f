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

#include "mqmkit/judge_parser.hpp"

#include <array>
#include <charconv>
#include <regex>

#include "mqmkit/text.hpp"

namespace mqmkit {

ThinkSplit split_think_answer(std::string_view raw) {
  static constexpr std::string_view kOpen = "<think>";
  static constexpr std::array<std::string_view, 2> kClose = {"</think>", "<\\think>"};

  ThinkSplit out;
  const auto open = raw.find(kOpen);
  const std::size_t search_from = open == std::string_view::npos ? 0 : open + kOpen.size();

  std::size_t close = std::string_view::npos;
  std::size_t close_len = 0;
  for (auto tag : kClose) {
    const auto pos = raw.find(tag, search_from);
    if (pos < close) {
      close = pos;
      close_len = tag.size();
    }
  }

  if (close != std::string_view::npos) {
    const std::size_t think_begin = open == std::string_view::npos ? 0 : search_from;
    out.think = std::string(text::trim(raw.substr(think_begin, close - think_begin)));
    out.answer = std::string(text::trim(raw.substr(close + close_len)));
    return out;
  }
  if (open != std::string_view::npos) {
    out.think = std::string(text::trim(raw.substr(search_from)));
    out.truncated = true;
    return out;
  }
  out.answer = std::string(raw);
  return out;
}

namespace {

struct SpanLine {
  std::string category;
  std::string span;
};

std::string unquote(std::string_view s) {
  s = text::trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

bool is_no_error_line(std::string_view line) {
  std::string t = text::to_lower(text::trim(line));
  while (!t.empty() && (t.back() == '.' || t.back() == ',')) t.pop_back();
  if (t.size() >= 2 && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
  return t == "no-error" || t == "no error" || t == "noerror";
}

bool recognized_exactly(std::string_view candidate) {
  const auto m = normalize_category(candidate);
  return m.recognized && !m.note;
}

// Accepts `category - span`, `[category]-[span]` and `category-span` where the
// category is a taxonomy label. `colon` additionally allows `category: span`.
std::optional<SpanLine> parse_span_line(std::string_view line, bool colon) {
  line = text::trim(line);
  if (line.empty()) return std::nullopt;

  if (line.front() == '[') {
    const auto close = line.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    std::string_view rest = text::trim(line.substr(close + 1));
    if (rest.empty() || rest.front() != '-') return std::nullopt;
    rest = text::trim(rest.substr(1));
    if (rest.size() >= 2 && rest.front() == '[' && rest.back() == ']') rest = rest.substr(1, rest.size() - 2);
    return SpanLine{std::string(line.substr(1, close - 1)), std::string(rest)};
  }

  if (const auto pos = line.find(" - "); pos != std::string_view::npos)
    return SpanLine{std::string(text::trim(line.substr(0, pos))), unquote(line.substr(pos + 3))};
  if (line.size() > 2 && line.ends_with(" -"))
    return SpanLine{std::string(text::trim(line.substr(0, line.size() - 2))), ""};

  for (std::size_t p = 0; p < line.size(); ++p) {
    const char c = line[p];
    if (c != '-' && !(colon && c == ':')) continue;
    const auto candidate = line.substr(0, p);
    if (recognized_exactly(candidate)) return SpanLine{std::string(text::trim(candidate)), unquote(line.substr(p + 1))};
  }
  return std::nullopt;
}

std::optional<Severity> header_severity(std::string_view line, bool lenient) {
  std::string t = text::to_lower(text::trim(line));
  if (!t.empty() && t.back() == ':') t.pop_back();
  t = std::string(text::trim(t));
  if (auto s = parse_severity(t)) return s;
  if (lenient) {
    for (std::string_view suffix : {" errors", " error"}) {
      if (t.ends_with(suffix))
        if (auto s = parse_severity(std::string_view(t).substr(0, t.size() - suffix.size()))) return s;
    }
  }
  return std::nullopt;
}

// Markdown decorations judges wrap around headers and items.
std::string strip_markdown(std::string_view line, bool& changed) {
  std::string_view t = text::trim(line);
  const std::string_view before = t;
  while (!t.empty() && t.front() == '#') t.remove_prefix(1);
  t = text::trim(t);
  for (std::string_view bullet : {"- ", "* ", "• "}) {
    if (t.starts_with(bullet)) {
      t.remove_prefix(bullet.size());
      break;
    }
  }
  std::string s(text::trim(t));
  // Numbered items: "1. ", "2) ".
  std::size_t digits = 0;
  while (digits < s.size() && s[digits] >= '0' && s[digits] <= '9') ++digits;
  if (digits > 0 && digits + 1 < s.size() && (s[digits] == '.' || s[digits] == ')') && s[digits + 1] == ' ')
    s = std::string(text::trim(std::string_view(s).substr(digits + 2)));
  s = text::replace_all(s, "**", "");
  s = text::replace_all(s, "__", "");
  if (s.size() >= 2 && s.front() == '`' && s.back() == '`' && !s.starts_with("```")) s = s.substr(1, s.size() - 2);
  changed = s != before;
  return s;
}

struct BlockState {
  bool seen = false;
  bool has_no_error = false;
  std::size_t spans = 0;
  std::size_t header_line = 0;
};

}  // namespace

ParsedJudgment parse_error_spans(std::string_view answer, Strictness strictness, const ParseOptions& options) {
  const bool lenient = strictness == Strictness::Lenient;
  ParsedJudgment out;
  out.strictness = strictness;

  std::array<BlockState, 3> blocks{};
  bool in_block = false;
  Severity current = Severity::Minor;
  bool blank_since_content = false;
  bool warned_markdown = false;

  const auto fail = [](std::size_t line_no, const std::string& msg) -> void {
    throw ParseError("line " + std::to_string(line_no) + ": " + msg);
  };
  const auto complain = [&](std::size_t line_no, const std::string& msg) {
    if (!lenient) fail(line_no, msg);
    out.parse_warnings.push_back("line " + std::to_string(line_no) + ": " + msg);
  };

  const auto lines = text::split_lines(answer);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    std::string line(text::trim(lines[i]));
    if (line.empty()) {
      if (in_block) blank_since_content = true;
      continue;
    }

    if (lenient) {
      if (line.starts_with("```")) {
        if (!warned_markdown) out.parse_warnings.push_back("markdown decorations stripped");
        warned_markdown = true;
        continue;
      }
      bool changed = false;
      std::string cleaned = strip_markdown(line, changed);
      if (changed) {
        if (!warned_markdown) out.parse_warnings.push_back("markdown decorations stripped");
        warned_markdown = true;
        line = std::move(cleaned);
      }
    }

    std::optional<Severity> header = header_severity(line, lenient);
    std::string inline_rest;
    if (!header && lenient) {
      // "Major: accuracy - x" on a single line.
      if (const auto colon = line.find(':'); colon != std::string::npos) {
        if (auto s = parse_severity(std::string_view(line).substr(0, colon))) {
          const std::string rest(text::trim(std::string_view(line).substr(colon + 1)));
          if (is_no_error_line(rest) || parse_span_line(rest, true)) {
            header = s;
            inline_rest = rest;
            out.parse_warnings.push_back("line " + std::to_string(line_no) + ": inline block header");
          }
        }
      }
    }

    if (header) {
      auto& b = blocks[static_cast<std::size_t>(*header)];
      if (b.seen) complain(line_no, "duplicate " + std::string(to_string(*header)) + " block");
      if (!b.seen) {
        out.block_order.push_back(*header);
        b.header_line = line_no;
      }
      b.seen = true;
      current = *header;
      in_block = true;
      blank_since_content = false;
      if (inline_rest.empty()) continue;
      line = inline_rest;
    }

    if (!in_block) continue;
    const Severity sev = current;
    auto& block = blocks[static_cast<std::size_t>(sev)];

    if (is_no_error_line(line)) {
      block.has_no_error = true;
      blank_since_content = false;
      continue;
    }

    auto parsed = parse_span_line(line, lenient);
    if (!parsed) {
      if (blank_since_content) {
        // Prose after a paragraph break closes the block.
        in_block = false;
        continue;
      }
      complain(line_no, "cannot read '" + line + "' in " + std::string(to_string(sev)) + " block");
      continue;
    }
    blank_since_content = false;

    CategoryMatch cat = normalize_category(parsed->category);
    if (!cat.recognized) complain(line_no, *cat.note);
    else if (cat.note && lenient) out.parse_warnings.push_back("line " + std::to_string(line_no) + ": " + *cat.note);
    if (is_no_error(cat.category)) {
      block.has_no_error = true;
      continue;
    }
    if (options.hypothesis && options.hypothesis->find(parsed->span) == std::string::npos)
      complain(line_no, "span '" + parsed->span + "' does not occur in the hypothesis");

    out.annotation.spans.push_back({sev, std::move(cat.category), std::move(parsed->span)});
    ++block.spans;
  }

  if (out.block_order.empty()) throw ParseError("no MQM blocks found");
  for (std::size_t s = 0; s < blocks.size(); ++s) {
    if (blocks[s].has_no_error && blocks[s].spans > 0)
      complain(blocks[s].header_line,
               std::string(to_string(static_cast<Severity>(s))) + " block mixes no-error with error spans");
  }
  return out;
}

double parse_direct_score(std::string_view answer, ScoreScale scale) {
  // Sign normalization: U+2212 minus and en dash read as '-'.
  std::string text = text::replace_all(answer, "\xE2\x88\x92", "-");
  text = text::replace_all(text, "\xE2\x80\x93", "-");

  static const std::regex kScore(
      R"(score\b[ \t]*(?:\([ \t]*0[ \t]*-[ \t]*100[ \t]*\))?[ \t]*(?:[:=]|is)?[ \t]*\**[ \t]*([-+]?[0-9]+(?:\.[0-9]+)?))",
      std::regex::icase | std::regex::ECMAScript);

  std::optional<std::string> last;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kScore); it != std::sregex_iterator(); ++it)
    last = (*it)[1].str();
  if (!last) throw ParseError("no score marker found");

  std::string_view digits = *last;
  if (digits.front() == '+') digits.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{}) throw ParseError("unreadable score '" + *last + "'");
  if (value == 0.0) value = 0.0;  // drop the sign of -0

  if (scale == ScoreScale::Mqm && value > 0.0)
    throw ScoreRangeError("MQM score " + *last + " is positive", *last);
  if (scale == ScoreScale::Esa0to100 && (value < 0.0 || value > 100.0))
    throw ScoreRangeError("ESA score " + *last + " outside [0, 100]", *last);
  return value;
}

std::string format_span_line(const ErrorSpan& span) {
  std::string s = text::replace_all(span.span, "\r", " ");
  s = text::replace_all(s, "\n", " ");
  return span.category.path() + " - \"" + s + "\"";
}

std::string format_error_blocks(std::span<const ErrorSpan> spans, BlockLayout layout) {
  std::string out;
  for (Severity sev : {Severity::Critical, Severity::Major, Severity::Minor}) {
    if (!out.empty() && layout.blank_line_between_blocks) out += "\n";
    out += std::string(to_string(sev)) + ":\n";
    bool any = false;
    for (const auto& s : spans) {
      if (s.severity != sev) continue;
      out += format_span_line(s) + "\n";
      any = true;
    }
    if (!any) out += "no-error\n";
  }
  out.pop_back();
  return out;
}

}  // namespace mqmkit
