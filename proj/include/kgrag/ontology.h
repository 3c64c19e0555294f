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

#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

class OntologySpec;

/// An entity label that has been checked against a loaded ontology. Only
/// OntologySpec can mint one, so holding an EntityType means the label is valid.
class EntityType {
 public:
  const std::string& label() const noexcept { return label_; }
  auto operator<=>(const EntityType&) const = default;

 private:
  friend class OntologySpec;
  explicit EntityType(std::string label) : label_(std::move(label)) {}
  std::string label_;
};

/// A relation label checked against a loaded ontology.
class RelationType {
 public:
  const std::string& label() const noexcept { return label_; }
  auto operator<=>(const RelationType&) const = default;

 private:
  friend class OntologySpec;
  explicit RelationType(std::string label) : label_(std::move(label)) {}
  std::string label_;
};

enum class PromptMode { kZeroShot, kSingleShot, kFewShot };

inline constexpr PromptMode kDefaultPromptMode = PromptMode::kFewShot;

/// Accepts "zero", "single", "few" and the "_shot" suffixed spellings.
std::optional<PromptMode> parse_prompt_mode(std::string_view text);
std::string_view to_string(PromptMode mode);

/// Raised by OntologySpec::parse. `line` is 0 when the problem is not tied to
/// a single line (e.g. a missing label).
class OntologyLoadError : public std::runtime_error {
 public:
  OntologyLoadError(const std::string& source, std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct LabelDefinition {
  std::string label;
  std::string definition;
};

/// The entity/relation taxonomy plus the refinement tables. Immutable once
/// loaded.
///
/// The twelve core entity labels and eight core relation labels must all be
/// defined. Additional labels are accepted and flow into prompts and
/// validation without code changes.
class OntologySpec {
 public:
  static OntologySpec parse(std::string_view document, const std::string& source_name = "<memory>");
  static OntologySpec load(const std::filesystem::path& path);

  static const std::vector<std::string>& core_entity_labels();
  static const std::vector<std::string>& core_relation_labels();

  std::optional<EntityType> entity_type(std::string_view label) const;
  std::optional<RelationType> relation_type(std::string_view label) const;

  const std::vector<LabelDefinition>& entities() const noexcept { return entities_; }
  const std::vector<LabelDefinition>& relations() const noexcept { return relations_; }
  const std::map<std::string, std::string, std::less<>>& synonyms() const noexcept { return synonyms_; }
  const std::vector<std::string>& trailing_tokens() const noexcept { return trailing_tokens_; }
  const std::vector<std::string>& type_priority() const noexcept { return type_priority_; }
  const std::string& base_iri() const noexcept { return base_iri_; }

  bool is_trailing_token(std::string_view token) const;

  /// Position in type_priority; lower wins ties.
  std::size_t priority_rank(const EntityType& type) const;

 private:
  OntologySpec() = default;

  std::vector<LabelDefinition> entities_;
  std::vector<LabelDefinition> relations_;
  std::map<std::string, std::string, std::less<>> synonyms_;
  std::vector<std::string> trailing_tokens_;
  std::vector<std::string> type_priority_;
  std::map<std::string, std::size_t, std::less<>> priority_rank_;
  std::string base_iri_;
};

/// Renders the relation-extraction prompt from the ontology. Output is a pure
/// function of (spec, mode).
std::string build_extraction_prompt(const OntologySpec& spec, PromptMode mode = kDefaultPromptMode);

/// The worked examples embedded in few-shot prompts, in prompt order.
struct PromptExample {
  std::string text;
  std::vector<std::string> output_lines;
};
const std::vector<PromptExample>& prompt_examples();

}  // namespace kgrag
