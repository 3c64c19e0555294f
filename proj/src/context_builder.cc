#include "kgrag/context_builder.h"

#include <cstdio>
#include <set>
#include <stdexcept>

#include "kgrag/text_util.h"

namespace kgrag {

void RetrievalConfig::validate() const {
  if (k_entities == 0 || k_relations == 0) throw std::invalid_argument("retrieval counts must be at least 1");
  if (!(min_score >= -1.0 && min_score <= 1.0)) throw std::invalid_argument("min_score must lie in [-1, 1]");
}

std::vector<EntityMatch> match_entities(std::string_view query, const VectorIndex& index, const Embedder& embedder,
                                        const RetrievalConfig& cfg) {
  std::vector<EntityMatch> out;
  if (text::trim(query).empty() || index.size() == 0) return out;
  auto vec = embedder.embed(query);
  if (vec.is_zero()) return out;
  for (auto& hit : index.search(vec, cfg.k_entities, DocClass::kEntity)) {
    if (hit.score < cfg.min_score) continue;
    const auto* doc = index.find(hit.id);
    out.push_back({hit.id, std::get<EntityDoc>(doc->doc), hit.score});
  }
  return out;
}

std::vector<EvidenceRow> gather_relations(const std::vector<EntityMatch>& entities, const GraphStore& store,
                                          const Vocabulary& vocab, const RetrievalConfig& cfg) {
  std::vector<EvidenceRow> out;
  std::set<std::string> seen;
  for (const auto& match : entities) {
    if (out.size() >= cfg.k_relations) break;
    // Per-entity limit k is enough: anything beyond it could never make the cut.
    for (auto& row : query_relations_for_entity(store, vocab, match.entity.name, cfg.k_relations)) {
      if (out.size() >= cfg.k_relations) break;
      if (!seen.insert(row.relation.str()).second) continue;
      out.push_back({row.relation.str(), std::move(row.predicate), std::move(row.subject), std::move(row.object),
                     std::move(row.publication_id)});
    }
  }
  return out;
}

std::string format_evidence_line(const EvidenceRow& row) {
  return "- " + row.subject + " —[" + row.predicate + "]→ " + row.object + " (source: " + row.publication_id +
         ")";
}

ContextBlock render_context(std::vector<EntityMatch> entities, std::vector<EvidenceRow> evidence,
                            const RetrievalConfig& cfg) {
  std::vector<std::string> entity_lines;
  if (!entities.empty()) {
    entity_lines.push_back("Matched entities:");
    for (const auto& m : entities) {
      char score[32];
      std::snprintf(score, sizeof score, "%.3f", m.score);
      entity_lines.push_back("- " + m.entity.name + " (" + m.entity.entity_type + "), similarity " + score);
    }
  }

  const std::size_t budget = cfg.max_context_chars;
  std::string rendered;
  auto fits = [&](const std::string& line) { return rendered.size() + line.size() + 1 <= budget; };
  auto add = [&](const std::string& line) {
    rendered += line;
    rendered += '\n';
  };

  std::size_t entity_lines_used = 0;
  for (const auto& line : entity_lines) {
    if (!fits(line)) break;
    add(line);
    ++entity_lines_used;
  }

  std::size_t rows_used = 0;
  if (!evidence.empty()) {
    const std::string header = "Relations:";
    std::string saved = rendered;
    if (fits(header)) {
      add(header);
      for (const auto& row : evidence) {
        std::string line = format_evidence_line(row);
        if (!fits(line)) break;
        add(line);
        ++rows_used;
      }
    }
    if (rows_used == 0) rendered = std::move(saved);
  }
  evidence.resize(rows_used);

  if (evidence.empty()) {
    const std::string marker(kNoRelationsMarker);
    // The marker takes precedence over trailing entity lines.
    while (!fits(marker) && entity_lines_used > 0) {
      --entity_lines_used;
      rendered.clear();
      for (std::size_t i = 0; i < entity_lines_used; ++i) add(entity_lines[i]);
    }
    if (fits(marker)) add(marker);
  }

  return {std::move(entities), std::move(evidence), std::move(rendered)};
}

ContextBlock build_context(std::string_view query, const VectorIndex& index, const Embedder& embedder,
                           const GraphStore& store, const Vocabulary& vocab, const RetrievalConfig& cfg) {
  auto entities = match_entities(query, index, embedder, cfg);
  auto evidence = gather_relations(entities, store, vocab, cfg);
  return render_context(std::move(entities), std::move(evidence), cfg);
}

}  // namespace kgrag
