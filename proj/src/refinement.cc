#include "kgrag/refinement.h"

#include <set>
#include <stdexcept>
#include <tuple>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "kgrag/text_util.h"

namespace kgrag {

using nlohmann::json;

std::optional<std::string> normalize_entity_name(std::string_view name, const OntologySpec& spec) {
  std::string out = text::collapse_whitespace(text::to_lower(name));
  for (;;) {
    std::size_t sp = out.rfind(' ');
    if (sp == std::string::npos || !spec.is_trailing_token(std::string_view(out).substr(sp + 1))) break;
    out.resize(sp);
  }
  if (out.empty()) return std::nullopt;
  if (auto it = spec.synonyms().find(out); it != spec.synonyms().end()) return it->second;
  return out;
}

TypeResolution resolve_entity_types(std::vector<ValidatedRelation>& relations, const OntologySpec& spec) {
  TypeResolution resolution;
  auto observe = [&](const std::string& name, const EntityType& type) {
    auto it = resolution.find(name);
    if (it == resolution.end()) it = resolution.emplace(name, TypeChoice{type, {}}).first;
    ++it->second.observed[type.label()];
  };
  for (const auto& r : relations) {
    observe(r.entity1_name, r.entity1_type);
    observe(r.entity2_name, r.entity2_type);
  }
  for (auto& [name, choice] : resolution) {
    std::size_t best_count = 0;
    for (const auto& [label, count] : choice.observed) {
      auto type = *spec.entity_type(label);
      if (count > best_count ||
          (count == best_count && spec.priority_rank(type) < spec.priority_rank(choice.chosen))) {
        best_count = count;
        choice.chosen = type;
      }
    }
  }
  for (auto& r : relations) {
    r.entity1_type = resolution.find(r.entity1_name)->second.chosen;
    r.entity2_type = resolution.find(r.entity2_name)->second.chosen;
  }
  return resolution;
}

std::vector<RefinedRelation> dedupe_and_filter(const std::vector<ValidatedRelation>& relations,
                                               RefinementStats* stats) {
  std::vector<RefinedRelation> out;
  std::set<std::tuple<std::string_view, std::string_view, std::string_view, std::string_view>> seen;
  for (const auto& r : relations) {
    if (r.entity1_name == r.entity2_name) {
      if (stats) ++stats->self_relation;
      continue;
    }
    if (!seen.emplace(r.relation_type.label(), r.entity1_name, r.entity2_name, r.publication_id).second) {
      if (stats) ++stats->duplicate;
      continue;
    }
    out.push_back({r.relation_type, {r.entity1_name, r.entity1_type}, {r.entity2_name, r.entity2_type}, r.publication_id});
  }
  return out;
}

RefinementResult refine(std::span<const ValidatedRelation> relations, const OntologySpec& spec) {
  RefinementResult result;
  result.stats.input = relations.size();

  std::vector<ValidatedRelation> normalized;
  normalized.reserve(relations.size());
  for (const auto& r : relations) {
    auto subject = normalize_entity_name(r.entity1_name, spec);
    auto object = normalize_entity_name(r.entity2_name, spec);
    if (!subject || !object) {
      ++result.stats.empty_name;
      spdlog::debug("dropping relation with empty entity name from {}", r.publication_id);
      continue;
    }
    ValidatedRelation n = r;
    n.entity1_name = std::move(*subject);
    n.entity2_name = std::move(*object);
    normalized.push_back(std::move(n));
  }

  std::vector<ValidatedRelation> before = normalized;
  result.types = resolve_entity_types(normalized, spec);
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    result.stats.retyped += (before[i].entity1_type != normalized[i].entity1_type) +
                            (before[i].entity2_type != normalized[i].entity2_type);
  }

  result.relations = dedupe_and_filter(normalized, &result.stats);
  result.stats.output = result.relations.size();
  return result;
}

RefinementResult refine(const ExtractionReport& report, const OntologySpec& spec) {
  return refine(std::span<const ValidatedRelation>(report.relations), spec);
}

ValidatedRelation to_validated(const RefinedRelation& r) {
  return {r.relation_type, r.subject.type, r.subject.name, r.object.type, r.object.name, r.publication_id};
}

std::vector<ValidatedRelation> to_validated(std::span<const RefinedRelation> relations) {
  std::vector<ValidatedRelation> out;
  out.reserve(relations.size());
  for (const auto& r : relations) out.push_back(to_validated(r));
  return out;
}

std::string refined_to_jsonl(std::span<const RefinedRelation> relations) {
  std::string out;
  for (const auto& r : relations) {
    json j = {{"relation_type", r.relation_type.label()},
              {"subject", {{"name", r.subject.name}, {"type", r.subject.type.label()}}},
              {"object", {{"name", r.object.name}, {"type", r.object.type.label()}}},
              {"publication_id", r.publication_id}};
    out += j.dump(-1, ' ', false, json::error_handler_t::replace);
    out += "\n";
  }
  return out;
}

std::vector<RefinedRelation> refined_from_jsonl(std::string_view content, const OntologySpec& spec) {
  std::vector<RefinedRelation> out;
  std::size_t lineno = 0;
  for (std::string_view line : text::split_lines(content)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto where = [&] { return "refined line " + std::to_string(lineno) + ": "; };
    try {
      json j = json::parse(line);
      auto rel = spec.relation_type(j.at("relation_type").get<std::string>());
      auto st = spec.entity_type(j.at("subject").at("type").get<std::string>());
      auto ot = spec.entity_type(j.at("object").at("type").get<std::string>());
      if (!rel || !st || !ot) throw std::invalid_argument(where() + "unknown label");
      out.push_back({*rel,
                     {j.at("subject").at("name").get<std::string>(), *st},
                     {j.at("object").at("name").get<std::string>(), *ot},
                     j.at("publication_id").get<std::string>()});
    } catch (const json::exception& e) {
      throw std::invalid_argument(where() + e.what());
    }
  }
  return out;
}

std::string stats_to_json(const RefinementStats& s) {
  json j = {{"input", s.input},
            {"output", s.output},
            {"dropped", {{"empty_name", s.empty_name}, {"self_relation", s.self_relation}, {"duplicate", s.duplicate}}},
            {"retyped", s.retyped}};
  return j.dump(2) + "\n";
}

}  // namespace kgrag
