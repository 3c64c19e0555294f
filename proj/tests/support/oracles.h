#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kgrag/embedder.h"
#include "kgrag/vector_index.h"

namespace kgrag::testing {

/// A few words drawn from a small medical vocabulary, so that random
/// documents overlap and produce non-trivial rankings.
std::string random_phrase(std::mt19937_64& rng, std::size_t min_words = 1, std::size_t max_words = 5);

/// Index of `n` random entity, relation and publication documents.
VectorIndex random_index(std::mt19937_64& rng, std::size_t n, const Embedder& embedder);

/// Full scan over the stored vectors, computed directly from the
/// definition: cosine in double precision, descending, ties by id.
std::vector<SearchHit> brute_force_top_k(const VectorIndex& index, const EmbeddingVector& query, std::size_t k,
                                         std::optional<DocClass> filter = std::nullopt);

}  // namespace kgrag::testing
