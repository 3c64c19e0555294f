#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/embedder.h"
#include "kgrag/graph_store.h"
#include "kgrag/knowledge_graph.h"
#include "kgrag/vector_index.h"

namespace kgrag {

struct RetrievalConfig {
  std::size_t k_entities = 5;
  std::size_t k_relations = 10;
  double min_score = 0.0;
  std::size_t max_context_chars = 4000;

  /// Throws std::invalid_argument if a count is zero or min_score is outside [-1, 1].
  void validate() const;
};

struct EntityMatch {
  std::string id;
  EntityDoc entity;
  double score = 0.0;
};

struct EvidenceRow {
  std::string relation_iri;
  std::string predicate;
  std::string subject;
  std::string object;
  std::string publication_id;

  bool operator==(const EvidenceRow&) const = default;
};

struct ContextBlock {
  std::vector<EntityMatch> matched_entities;
  std::vector<EvidenceRow> evidence;  // only rows that made it into `rendered`
  std::string rendered;
};

/// Line rendered when no relation could be retrieved.
inline constexpr std::string_view kNoRelationsMarker =
    "No relations found in the knowledge graph for this query; no additional references were found.";

/// Entity-class search for the query; hits below cfg.min_score are dropped.
std::vector<EntityMatch> match_entities(std::string_view query, const VectorIndex& index, const Embedder& embedder,
                                        const RetrievalConfig& cfg);

/// Union of the 1-hop relations of each matched entity, deduplicated by
/// relation IRI, ordered by (rank of the best matching entity, relation IRI)
/// and cut at cfg.k_relations.
std::vector<EvidenceRow> gather_relations(const std::vector<EntityMatch>& entities, const GraphStore& store,
                                          const Vocabulary& vocab, const RetrievalConfig& cfg);

std::string format_evidence_line(const EvidenceRow& row);

/// Renders matched entities then one line per relation, cutting at whole
/// lines to stay within cfg.max_context_chars.
ContextBlock render_context(std::vector<EntityMatch> entities, std::vector<EvidenceRow> evidence,
                            const RetrievalConfig& cfg);

ContextBlock build_context(std::string_view query, const VectorIndex& index, const Embedder& embedder,
                           const GraphStore& store, const Vocabulary& vocab, const RetrievalConfig& cfg);

}  // namespace kgrag
