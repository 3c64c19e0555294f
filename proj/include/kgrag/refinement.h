#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/extraction.h"
#include "kgrag/ontology.h"

namespace kgrag {

struct NamedEntity {
  std::string name;
  EntityType type;

  bool operator==(const NamedEntity&) const = default;
};

/// A relation ready for the knowledge graph: canonical names, one type per
/// name across the whole set, no self-relations.
struct RefinedRelation {
  RelationType relation_type;
  NamedEntity subject;
  NamedEntity object;
  std::string publication_id;

  bool operator==(const RefinedRelation&) const = default;
};

/// Lower-cases, trims and single-spaces `name`, strips trailing tokens until
/// none is left (never the whole name), then maps the full string through
/// the synonym table. Returns nullopt when nothing is left.
std::optional<std::string> normalize_entity_name(std::string_view name, const OntologySpec& spec);

struct TypeChoice {
  EntityType chosen;
  std::map<std::string, std::size_t> observed;  // label -> count
};
using TypeResolution = std::map<std::string, TypeChoice, std::less<>>;

/// Picks the most frequent type per name (ties go to the earlier entry in
/// type_priority) and rewrites every occurrence to it. Names must already be
/// normalized.
TypeResolution resolve_entity_types(std::vector<ValidatedRelation>& relations, const OntologySpec& spec);

struct RefinementStats {
  std::size_t input = 0;
  std::size_t output = 0;
  std::size_t empty_name = 0;
  std::size_t self_relation = 0;
  std::size_t duplicate = 0;
  std::size_t retyped = 0;  // occurrences whose type changed in resolution

  bool operator==(const RefinementStats&) const = default;
};

/// Drops self-relations and repeats of (relation, subject, object,
/// publication); the first occurrence wins and order is otherwise kept.
std::vector<RefinedRelation> dedupe_and_filter(const std::vector<ValidatedRelation>& relations,
                                               RefinementStats* stats = nullptr);

struct RefinementResult {
  std::vector<RefinedRelation> relations;
  RefinementStats stats;
  TypeResolution types;
};

RefinementResult refine(std::span<const ValidatedRelation> relations, const OntologySpec& spec);
RefinementResult refine(const ExtractionReport& report, const OntologySpec& spec);

ValidatedRelation to_validated(const RefinedRelation& relation);
std::vector<ValidatedRelation> to_validated(std::span<const RefinedRelation> relations);

/// One JSON object per line.
std::string refined_to_jsonl(std::span<const RefinedRelation> relations);
std::vector<RefinedRelation> refined_from_jsonl(std::string_view text, const OntologySpec& spec);
std::string stats_to_json(const RefinementStats& stats);

}  // namespace kgrag
