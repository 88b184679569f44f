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

#include "mqmkit/prompt_kit.hpp"

#include <algorithm>
#include <utility>

#include "mqmkit/error.hpp"
#include "mqmkit/hashing.hpp"
#include "mqmkit/io.hpp"
#include "mqmkit/judge_parser.hpp"
#include "mqmkit/text.hpp"

namespace mqmkit {

namespace {

struct EmbeddedTemplate {
  const char* id;
  const char* text;
};

constexpr EmbeddedTemplate kDefaults[] = {
#include "mqmkit_default_templates.inc"
};

std::string drop_trailing_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

}  // namespace

TextTemplate::TextTemplate(std::string id, std::string text) : id_(std::move(id)), text_(std::move(text)) {}

std::vector<std::string> TextTemplate::placeholders() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text_.size(); ++i) {
    if (text_[i] != '{') continue;
    if (i + 1 < text_.size() && text_[i + 1] == '{') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < text_.size() && is_placeholder_char(text_[j])) ++j;
    if (j < text_.size() && text_[j] == '}' && j > i + 1) {
      std::string name = text_.substr(i + 1, j - i - 1);
      if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
    }
  }
  return out;
}

std::string TextTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  out.reserve(text_.size() + 256);
  for (std::size_t i = 0; i < text_.size(); ++i) {
    const char c = text_[i];
    if (c == '{' && i + 1 < text_.size() && text_[i + 1] == '{') {
      out.push_back('{');
      ++i;
      continue;
    }
    if (c == '}' && i + 1 < text_.size() && text_[i + 1] == '}') {
      out.push_back('}');
      ++i;
      continue;
    }
    if (c == '{') {
      std::size_t j = i + 1;
      while (j < text_.size() && is_placeholder_char(text_[j])) ++j;
      if (j < text_.size() && text_[j] == '}' && j > i + 1) {
        const std::string name = text_.substr(i + 1, j - i - 1);
        const auto it = values.find(name);
        if (it == values.end())
          throw PreconditionError("template '" + id_ + "' uses placeholder {" + name + "} which is not available here");
        out += it->second;
        i = j;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> default_template_ids() {
  std::vector<std::string> ids;
  for (const auto& t : kDefaults) ids.emplace_back(t.id);
  return ids;
}

TextTemplate default_template(std::string_view id) {
  for (const auto& t : kDefaults)
    if (id == t.id) return TextTemplate(t.id, drop_trailing_newline(t.text));
  throw UsageError("unknown template '" + std::string(id) + "'");
}

TextTemplate load_template(const std::filesystem::path& path) {
  return TextTemplate(path.stem().string(), drop_trailing_newline(read_text_file(path)));
}

std::string language_name(std::string_view code) {
  static const std::pair<std::string_view, std::string_view> kNames[] = {
      {"ar", "Arabic"},  {"bn", "Bengali"},   {"cs", "Czech"},     {"de", "German"},     {"en", "English"},
      {"es", "Spanish"}, {"et", "Estonian"},  {"fi", "Finnish"},   {"fr", "French"},     {"gu", "Gujarati"},
      {"he", "Hebrew"},  {"hi", "Hindi"},     {"is", "Icelandic"}, {"it", "Italian"},    {"ja", "Japanese"},
      {"kk", "Kazakh"},  {"ko", "Korean"},    {"lt", "Lithuanian"}, {"lv", "Latvian"},   {"pl", "Polish"},
      {"pt", "Portuguese"}, {"ro", "Romanian"}, {"ru", "Russian"}, {"ta", "Tamil"},      {"tr", "Turkish"},
      {"uk", "Ukrainian"}, {"zh", "Chinese"},
  };
  const std::string lower = text::to_lower(text::trim(code));
  for (const auto& [c, name] : kNames)
    if (lower == c) return std::string(name);
  return std::string(code);
}

LanguageNames language_names(std::string_view lang_pair) {
  const auto dash = lang_pair.find('-');
  if (dash == std::string_view::npos) return {std::string(lang_pair), std::string(lang_pair)};
  return {language_name(lang_pair.substr(0, dash)), language_name(lang_pair.substr(dash + 1))};
}

std::vector<Demo> default_demos() {
  const auto make = [](std::int64_t id, std::string src, std::string ref, std::string hyp, std::vector<ErrorSpan> spans) {
    Demo d;
    d.segment.key = {"en-de", "demo", "demo", id};
    d.segment.source = std::move(src);
    d.segment.reference = std::move(ref);
    d.segment.hypothesis = std::move(hyp);
    d.annotation.key = d.segment.key;
    d.annotation.spans = std::move(spans);
    return d;
  };
  return {
      make(0, "[demo source sentence one]", "[demo reference one]", "[demo translation one]",
           {{Severity::Major, {"accuracy", "mistranslation"}, "[translated phrase]"},
            {Severity::Minor, {"fluency", "grammar"}, "[word]"}}),
      make(1, "[demo source sentence two]", "[demo reference two]", "[demo translation two]",
           {{Severity::Critical, {"accuracy", "omission"}, "[omitted clause]"}}),
      make(2, "[demo source sentence three]", "[demo reference three]", "[demo translation three]", {}),
  };
}

const TextTemplate& PromptTemplate::resolved_body() const {
  if (body) return *body;
  static const TextTemplate kSrc = default_template("gemba-mqm-src");
  static const TextTemplate kRef = default_template("gemba-mqm-ref");
  static const TextTemplate kJoint = default_template("gemba-mqm-joint");
  switch (mode) {
    case MaterialsMode::Src: return kSrc;
    case MaterialsMode::Ref: return kRef;
    case MaterialsMode::Joint: return kJoint;
  }
  return kSrc;
}

std::string prompt_fingerprint(std::string_view template_id, const SegmentKey& key, MaterialsMode mode) {
  std::string material;
  material.append(template_id).push_back('\x1f');
  material.append(key.lang_pair).push_back('\x1f');
  material.append(key.system_id).push_back('\x1f');
  material.append(key.doc_id).push_back('\x1f');
  material.append(std::to_string(key.seg_id)).push_back('\x1f');
  material.append(to_string(mode));
  return to_hex(fnv1a64(material));
}

namespace {

std::map<std::string, std::string> segment_values(const Segment& s, MaterialsMode mode,
                                                  const std::optional<LanguageNames>& override_names) {
  const LanguageNames names = override_names.value_or(language_names(s.key.lang_pair));
  std::map<std::string, std::string> v = {
      {"source_lang", names.source}, {"target_lang", names.target}, {"translation", s.hypothesis}};
  if (shows_source(mode)) v["source"] = s.source;
  if (shows_reference(mode)) v["reference"] = *s.reference;
  return v;
}

}  // namespace

RenderedPrompt build_judge_prompt(const Segment& segment, const PromptTemplate& tmpl) {
  if (tmpl.demos.size() > 3) throw PreconditionError("at most three demonstrations are supported");
  require_materials(segment, tmpl.mode);
  const TextTemplate& body = tmpl.resolved_body();

  std::string demos;
  for (const auto& demo : tmpl.demos) {
    require_materials(demo.segment, tmpl.mode);
    auto values = segment_values(demo.segment, tmpl.mode, tmpl.languages);
    values["demos"] = "";
    demos += body.render(values);
    demos += "\n";
    demos += format_error_blocks(demo.annotation.spans);
    demos += "\n\n";
  }

  auto values = segment_values(segment, tmpl.mode, tmpl.languages);
  values["demos"] = demos;
  RenderedPrompt out;
  out.text = body.render(values);
  out.template_id = body.id();
  out.fingerprint = prompt_fingerprint(body.id(), segment.key, tmpl.mode);
  return out;
}

RenderedPrompt build_rescoring_prompt(const Segment& segment, std::string_view esa_details, MaterialsMode mode,
                                      const std::optional<TextTemplate>& body,
                                      const std::optional<LanguageNames>& languages) {
  if (text::trim(esa_details).empty()) throw PreconditionError("rescoring needs non-empty error span details");
  require_materials(segment, mode);
  static const TextTemplate kDefault = default_template("gemba-esa-rescore");
  const TextTemplate& tmpl = body ? *body : kDefault;

  auto values = segment_values(segment, mode, languages);
  // The rescoring layout always shows the source next to the translation.
  values["source"] = segment.source;
  values["esa_details"] = std::string(esa_details);
  RenderedPrompt out;
  out.text = tmpl.render(values);
  out.template_id = tmpl.id();
  out.fingerprint = prompt_fingerprint(tmpl.id(), segment.key, mode);
  return out;
}

}  // namespace mqmkit
