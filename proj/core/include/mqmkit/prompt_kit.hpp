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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mqmkit/data_model.hpp"

namespace mqmkit {

// Plain text with {name} placeholders; "{{" and "}}" are literal braces.
class TextTemplate {
 public:
  TextTemplate() = default;
  TextTemplate(std::string id, std::string text);

  const std::string& id() const { return id_; }
  const std::string& text() const { return text_; }
  std::vector<std::string> placeholders() const;

  // Substitutes in one pass; values are not rescanned. An unknown placeholder
  // throws PreconditionError, which is how a template that references
  // material a mode must not show gets rejected.
  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  std::string id_;
  std::string text_;
};

// Shipped templates: gemba-mqm-src, gemba-mqm-ref, gemba-mqm-joint,
// gemba-esa-rescore, thinmqm-src, thinmqm-ref, thinmqm-target.
std::vector<std::string> default_template_ids();
TextTemplate default_template(std::string_view id);
// Template id is the file stem; one trailing newline is dropped.
TextTemplate load_template(const std::filesystem::path& path);

struct LanguageNames {
  std::string source;
  std::string target;

  bool operator==(const LanguageNames&) const = default;
};

// "en-de" -> {"English", "German"}; unknown codes are used as-is.
LanguageNames language_names(std::string_view lang_pair);
std::string language_name(std::string_view code);

struct Demo {
  Segment segment;
  ErrorAnnotation annotation;
};

// Placeholder demonstrations in the block layout; replace with canonical
// examples for real runs.
std::vector<Demo> default_demos();

struct PromptTemplate {
  MaterialsMode mode = MaterialsMode::Src;
  std::vector<Demo> demos;                  // at most three
  std::optional<LanguageNames> languages;   // overrides the built-in table
  std::optional<TextTemplate> body;         // defaults to gemba-mqm-<mode>

  const TextTemplate& resolved_body() const;
};

struct RenderedPrompt {
  std::string text;
  std::string fingerprint;
  std::string template_id;

  bool operator==(const RenderedPrompt&) const = default;
};

// Stable hash of (template id, segment key, mode).
std::string prompt_fingerprint(std::string_view template_id, const SegmentKey& key, MaterialsMode mode);

// Demos first (each rendered with the same body, followed by its answer in
// block format), then the query segment.
RenderedPrompt build_judge_prompt(const Segment& segment, const PromptTemplate& tmpl);

// Model rescoring of annotated spans on the 0-100 scale. `esa_details` is
// block text (see format_error_blocks) or "no-error".
RenderedPrompt build_rescoring_prompt(const Segment& segment, std::string_view esa_details, MaterialsMode mode,
                                      const std::optional<TextTemplate>& body = std::nullopt,
                                      const std::optional<LanguageNames>& languages = std::nullopt);

}  // namespace mqmkit
