// Copyright 2026 the kgrag authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kgrag/ontology.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "kgrag/text_util.h"

namespace kgrag {
namespace {

constexpr std::string_view kSections[] = {"entities", "relations", "synonyms",
                                          "trailing_tokens", "type_priority", "iri"};

bool is_label(std::string_view s) {
  if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || text::is_digit(c) || c == '_';
  });
}

bool is_normalized(std::string_view s) {
  return !s.empty() && text::collapse_whitespace(text::to_lower(s)) == s;
}

struct Entry {
  std::size_t line;
  std::string key;
  std::string value;
};

struct Section {
  std::size_t line = 0;
  std::vector<Entry> entries;  // list sections leave `value` empty
};

class DocumentParser {
 public:
  DocumentParser(std::string_view doc, const std::string& source) : doc_(doc), source_(source) {}

  std::map<std::string, Section, std::less<>> run() {
    std::map<std::string, Section, std::less<>> sections;
    Section* current = nullptr;
    std::string current_name;
    std::size_t lineno = 0;
    for (std::string_view raw : text::split_lines(doc_)) {
      ++lineno;
      std::string_view line = text::trim(raw);
      if (line.empty() || line.front() == '#') continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(lineno, "unterminated section header");
        current_name = std::string(text::trim(line.substr(1, line.size() - 2)));
        if (std::find(std::begin(kSections), std::end(kSections), current_name) == std::end(kSections)) {
          fail(lineno, "unknown section [" + current_name + "]");
        }
        if (sections.count(current_name)) fail(lineno, "duplicate section [" + current_name + "]");
        current = &sections[current_name];
        current->line = lineno;
        continue;
      }
      if (current == nullptr) fail(lineno, "content before first section header");
      bool is_list = current_name == "trailing_tokens" || current_name == "type_priority";
      Entry entry{lineno, {}, {}};
      std::size_t pos = 0;
      entry.key = scalar(line, pos, lineno, /*stop_at_equals=*/!is_list);
      skip_space(line, pos);
      if (is_list) {
        if (pos != line.size()) fail(lineno, "unexpected text after list item");
      } else {
        if (pos >= line.size() || line[pos] != '=') fail(lineno, "expected '=' after key");
        ++pos;
        skip_space(line, pos);
        entry.value = scalar(line, pos, lineno, false);
        skip_space(line, pos);
        if (pos != line.size()) fail(lineno, "unexpected text after value");
      }
      if (entry.key.empty()) fail(lineno, "empty key");
      current->entries.push_back(std::move(entry));
    }
    return sections;
  }

  [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
    throw OntologyLoadError(source_, line, msg);
  }

 private:
  static void skip_space(std::string_view s, std::size_t& pos) {
    while (pos < s.size() && text::is_space(s[pos])) ++pos;
  }

  // Either a double-quoted string with \" and \\ escapes, or bare text up to
  // '=' (keys) / end of line (values and list items).
  std::string scalar(std::string_view s, std::size_t& pos, std::size_t lineno, bool stop_at_equals) const {
    std::string out;
    if (pos < s.size() && s[pos] == '"') {
      ++pos;
      while (pos < s.size() && s[pos] != '"') {
        if (s[pos] == '\\' && pos + 1 < s.size()) ++pos;
        out.push_back(s[pos++]);
      }
      if (pos >= s.size()) fail(lineno, "unterminated string");
      ++pos;
      return out;
    }
    std::size_t start = pos;
    while (pos < s.size() && !(stop_at_equals && s[pos] == '=')) ++pos;
    return std::string(text::trim(s.substr(start, pos - start)));
  }

  std::string_view doc_;
  const std::string& source_;
};

std::string join_bold(const std::vector<LabelDefinition>& defs) {
  std::string out;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    if (i) out += ", ";
    out += "**" + defs[i].label + "**";
  }
  return out;
}

std::string definition_lines(const std::vector<LabelDefinition>& defs) {
  std::string out;
  for (const auto& d : defs) out += "- **" + d.label + "**: " + d.definition + "\n";
  return out;
}

void replace_slot(std::string& tmpl, std::string_view slot, std::string_view value) {
  std::size_t pos = tmpl.find(slot);
  while (pos != std::string::npos) {
    tmpl.replace(pos, slot.size(), value);
    pos = tmpl.find(slot, pos + value.size());
  }
}

// Canonical extraction prompt. `${...}` slots are filled from the ontology.
constexpr std::string_view kExtractionTemplate =
    "You are an AI language model tasked with:\n"
    "1. **Entity Identification**:\n"
    "- Identify entities in the text labeled **only** as:\n"
    " - ${entity_labels}\n"
    "- **Use these exact labels; do not introduce new labels or synonyms.**\n"
    "**Entity Type Definitions**:\n"
    "${entity_definitions}"
    "2. **Relationship Extraction**:\n"
    "- Extract relationships among these entities based on the relations **only**:\n"
    " - ${relation_labels}\n"
    "- **Use these exact labels; do not introduce new labels or synonyms.**\n"
    "**Relation Type Definitions**:\n"
    "${relation_definitions}"
    "**Instructions**:\n"
    "- **Consistency Rule**: Assign the same entity type to an entity whenever it appears, "
    "based on the definitions provided.\n"
    "- **Ambiguous Entities**: If an entity could belong to multiple types, refer to the "
    "definitions and choose the most appropriate type based on context.\n"
    "- **Important**: Use **only** the specified labels for entity and relation types. "
    "Do not use synonyms, variations, or introduce new labels.\n"
    "**Output Format**:\n"
    "Present each relationship in the following exact format (including single quotes and braces):\n"
    "{'relation_type': 'relation_type_value', 'entity1_type': 'entity1_type_value', "
    "'entity1_name': 'entity1_name_value', 'entity2_type': 'entity2_type_value', "
    "'entity2_name': 'entity2_name_value'}\n"
    "${examples}";

}  // namespace

OntologyLoadError::OntologyLoadError(const std::string& source, std::size_t line, const std::string& message)
    : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

std::optional<PromptMode> parse_prompt_mode(std::string_view text) {
  if (text == "zero" || text == "zero_shot") return PromptMode::kZeroShot;
  if (text == "single" || text == "single_shot") return PromptMode::kSingleShot;
  if (text == "few" || text == "few_shot") return PromptMode::kFewShot;
  return std::nullopt;
}

std::string_view to_string(PromptMode mode) {
  switch (mode) {
    case PromptMode::kZeroShot: return "zero_shot";
    case PromptMode::kSingleShot: return "single_shot";
    case PromptMode::kFewShot: return "few_shot";
  }
  return "few_shot";
}

const std::vector<std::string>& OntologySpec::core_entity_labels() {
  static const std::vector<std::string> labels = {
      "disease",    "symptom",   "treatment", "risk_factor", "test",        "gene",
      "biomarker",  "complication", "prognosis", "comorbidity", "progression", "body_part"};
  return labels;
}

const std::vector<std::string>& OntologySpec::core_relation_labels() {
  static const std::vector<std::string> labels = {"cause",     "treat",   "present", "diagnose",
                                                  "aggravate", "prevent", "improve", "affect"};
  return labels;
}

OntologySpec OntologySpec::load(const std::filesystem::path& path) {
  std::string doc;
  try {
    doc = text::read_file(path);
  } catch (const std::exception& e) {
    throw OntologyLoadError(path.string(), 0, e.what());
  }
  return parse(doc, path.string());
}

OntologySpec OntologySpec::parse(std::string_view document, const std::string& source_name) {
  DocumentParser parser(document, source_name);
  auto sections = parser.run();
  for (std::string_view name : kSections) {
    if (!sections.count(name)) parser.fail(0, "missing section [" + std::string(name) + "]");
  }

  OntologySpec spec;

  auto read_defs = [&](const Section& sec, const std::vector<std::string>& core, std::string_view kind,
                       std::vector<LabelDefinition>& out) {
    std::set<std::string, std::less<>> seen;
    for (const auto& e : sec.entries) {
      if (!is_label(e.key)) parser.fail(e.line, std::string(kind) + " label not snake_case: '" + e.key + "'");
      if (!seen.insert(e.key).second) parser.fail(e.line, "duplicate " + std::string(kind) + " label '" + e.key + "'");
      if (text::trim(e.value).empty()) parser.fail(e.line, "empty definition for '" + e.key + "'");
      out.push_back({e.key, std::string(text::trim(e.value))});
    }
    for (const auto& label : core) {
      if (!seen.count(label)) {
        parser.fail(sec.line, "missing definition for " + std::string(kind) + " label '" + label + "'");
      }
    }
  };
  read_defs(sections.find("entities")->second, core_entity_labels(), "entity", spec.entities_);
  read_defs(sections.find("relations")->second, core_relation_labels(), "relation", spec.relations_);

  for (const auto& e : sections.find("trailing_tokens")->second.entries) {
    if (!is_normalized(e.key) || e.key.find(' ') != std::string::npos) {
      parser.fail(e.line, "trailing token not a normalized single word: '" + e.key + "'");
    }
    if (std::find(spec.trailing_tokens_.begin(), spec.trailing_tokens_.end(), e.key) != spec.trailing_tokens_.end()) {
      parser.fail(e.line, "duplicate trailing token '" + e.key + "'");
    }
    spec.trailing_tokens_.push_back(e.key);
  }

  const auto& syn = sections.find("synonyms")->second;
  for (const auto& e : syn.entries) {
    if (!is_normalized(e.key)) parser.fail(e.line, "synonym key not normalized: '" + e.key + "'");
    if (!is_normalized(e.value)) parser.fail(e.line, "synonym value not normalized: '" + e.value + "'");
    if (!spec.synonyms_.emplace(e.key, e.value).second) parser.fail(e.line, "duplicate synonym key '" + e.key + "'");
  }
  // Canonical names must be fixpoints of normalization, otherwise normalizing
  // twice could change the result.
  for (const auto& e : syn.entries) {
    auto it = spec.synonyms_.find(e.value);
    if (it != spec.synonyms_.end() && it->second != e.value) {
      parser.fail(e.line, "synonym value '" + e.value + "' is itself a synonym key");
    }
    std::size_t sp = e.value.rfind(' ');
    if (sp != std::string::npos && spec.is_trailing_token(std::string_view(e.value).substr(sp + 1))) {
      parser.fail(e.line, "synonym value '" + e.value + "' ends with a trailing token");
    }
  }

  const auto& prio = sections.find("type_priority")->second;
  for (const auto& e : prio.entries) {
    if (!spec.entity_type(e.key)) parser.fail(e.line, "unknown entity label in type_priority: '" + e.key + "'");
    if (!spec.priority_rank_.emplace(e.key, spec.type_priority_.size()).second) {
      parser.fail(e.line, "duplicate label in type_priority: '" + e.key + "'");
    }
    spec.type_priority_.push_back(e.key);
  }
  for (const auto& d : spec.entities_) {
    if (!spec.priority_rank_.count(d.label)) {
      parser.fail(prio.line, "incomplete type_priority: missing '" + d.label + "'");
    }
  }

  const auto& iri = sections.find("iri")->second;
  for (const auto& e : iri.entries) {
    if (e.key != "base") parser.fail(e.line, "unknown key in [iri]: '" + e.key + "'");
    spec.base_iri_ = e.value;
  }
  if (spec.base_iri_.empty()) parser.fail(iri.line, "[iri] requires 'base'");
  auto colon = spec.base_iri_.find(':');
  bool has_scheme = colon != std::string::npos && colon > 0 && text::is_alpha(spec.base_iri_[0]);
  bool bad_char = std::any_of(spec.base_iri_.begin(), spec.base_iri_.end(), [](char c) {
    return static_cast<unsigned char>(c) <= 0x20 || std::string_view("<>\"{}|^`\\").find(c) != std::string_view::npos;
  });
  if (!has_scheme || bad_char) parser.fail(iri.line, "base IRI is not an absolute IRI: '" + spec.base_iri_ + "'");
  char last = spec.base_iri_.back();
  if (last != '/' && last != '#') parser.fail(iri.line, "base IRI must end with '/' or '#'");

  return spec;
}

std::optional<EntityType> OntologySpec::entity_type(std::string_view label) const {
  for (const auto& d : entities_) {
    if (d.label == label) return EntityType(d.label);
  }
  return std::nullopt;
}

std::optional<RelationType> OntologySpec::relation_type(std::string_view label) const {
  for (const auto& d : relations_) {
    if (d.label == label) return RelationType(d.label);
  }
  return std::nullopt;
}

bool OntologySpec::is_trailing_token(std::string_view token) const {
  return std::find(trailing_tokens_.begin(), trailing_tokens_.end(), token) != trailing_tokens_.end();
}

std::size_t OntologySpec::priority_rank(const EntityType& type) const {
  auto it = priority_rank_.find(type.label());
  return it == priority_rank_.end() ? type_priority_.size() : it->second;
}

const std::vector<PromptExample>& prompt_examples() {
  static const std::vector<PromptExample> examples = {
      {"AMD affects the retina and causes vision loss.",
       {"{'relation_type': 'affect', 'entity1_type': 'disease', 'entity1_name': 'AMD', "
        "'entity2_type': 'body_part', 'entity2_name': 'retina'}",
        "{'relation_type': 'cause', 'entity1_type': 'disease', 'entity1_name': 'AMD', "
        "'entity2_type': 'symptom', 'entity2_name': 'vision loss'}"}},
      {"Smoking is a risk factor that aggravates AMD progression.",
       {"{'relation_type': 'aggravate', 'entity1_type': 'risk_factor', 'entity1_name': 'Smoking', "
        "'entity2_type': 'progression', 'entity2_name': 'AMD progression'}"}},
      {"Anti-VEGF therapy treats wet AMD and improves vision.",
       {"{'relation_type': 'treat', 'entity1_type': 'treatment', 'entity1_name': 'Anti-VEGF therapy', "
        "'entity2_type': 'disease', 'entity2_name': 'wet AMD'}",
        "{'relation_type': 'improve', 'entity1_type': 'treatment', 'entity1_name': 'Anti-VEGF therapy', "
        "'entity2_type': 'symptom', 'entity2_name': 'vision'}"}},
  };
  return examples;
}

std::string build_extraction_prompt(const OntologySpec& spec, PromptMode mode) {
  std::size_t n_examples = 0;
  switch (mode) {
    case PromptMode::kZeroShot: n_examples = 0; break;
    case PromptMode::kSingleShot: n_examples = 1; break;
    case PromptMode::kFewShot: n_examples = prompt_examples().size(); break;
  }
  std::string examples;
  if (n_examples > 0) {
    examples = "**Examples**:\n";
    for (std::size_t i = 0; i < n_examples; ++i) {
      const auto& ex = prompt_examples()[i];
      examples += "Text: \"" + ex.text + "\"\nOutput:\n";
      for (const auto& line : ex.output_lines) examples += line + "\n";
    }
  }

  std::string prompt(kExtractionTemplate);
  replace_slot(prompt, "${entity_labels}", join_bold(spec.entities()));
  replace_slot(prompt, "${entity_definitions}", definition_lines(spec.entities()));
  replace_slot(prompt, "${relation_labels}", join_bold(spec.relations()));
  replace_slot(prompt, "${relation_definitions}", definition_lines(spec.relations()));
  replace_slot(prompt, "${examples}", examples);
  return prompt;
}

}  // namespace kgrag
