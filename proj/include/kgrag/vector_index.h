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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "kgrag/graph_store.h"
#include "kgrag/knowledge_graph.h"

namespace kgrag {

inline constexpr std::size_t kDefaultEmbeddingDim = 384;

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(std::size_t expected, std::size_t actual);
};

class ZeroVector : public std::invalid_argument {
 public:
  ZeroVector() : std::invalid_argument("zero vector has no direction") {}
};

class NonFiniteVector : public std::invalid_argument {
 public:
  NonFiniteVector() : std::invalid_argument("vector has a non-finite component") {}
};

class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}

  std::span<const double> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  bool is_zero() const noexcept;
  bool is_finite() const noexcept;
  double norm() const noexcept;

 private:
  std::vector<double> values_;
};

/// dot(a, b) / (|a| |b|), clamped to [-1, 1]. Throws DimensionMismatch or
/// ZeroVector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

enum class DocClass : std::uint8_t { kEntity = 0, kRelation = 1, kPublication = 2 };
std::string_view to_string(DocClass c);

struct EntityDoc {
  std::string name;
  std::string entity_type;
  bool operator==(const EntityDoc&) const = default;
};

struct RelationDoc {
  std::string predicate;
  std::string subject;
  std::string object;
  std::string publication_ref;  // id of the PublicationDoc
  bool operator==(const RelationDoc&) const = default;
};

struct PublicationDoc {
  std::string publication_id;
  bool operator==(const PublicationDoc&) const = default;
};

using Document = std::variant<EntityDoc, RelationDoc, PublicationDoc>;

DocClass class_of(const Document& doc);

/// Text that gets embedded: "name (type)", "subject predicate object", or the
/// publication id.
std::string document_text(const Document& doc);

struct IndexedDocument {
  std::string id;
  Document doc;
  std::vector<float> vector;
  double norm = 0.0;
};

struct SearchHit {
  std::string id;
  double score = 0.0;
  DocClass doc_class = DocClass::kEntity;
  bool operator==(const SearchHit&) const = default;
};

/// Exact (full-scan) cosine index. Vectors are stored as 32-bit floats so an
/// index and its snapshot behave identically. Build, freeze(), then share
/// read-only.
class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dim = kDefaultEmbeddingDim);

  /// Replaces any document with the same id. Rejects zero, non-finite and
  /// wrong-dimension vectors.
  const std::string& index_document(std::string id, Document doc, const EmbeddingVector& vector);

  const IndexedDocument* find(std::string_view id) const;
  std::size_t size() const noexcept { return docs_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t count(DocClass c) const;
  const std::vector<IndexedDocument>& documents() const noexcept { return docs_; }

  /// Top-k by descending cosine, ties by ascending id. Throws
  /// std::invalid_argument for k == 0.
  std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k,
                                std::optional<DocClass> filter = std::nullopt) const;

  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

  /// Relation documents whose publication_ref names no indexed publication.
  std::vector<std::string> dangling_publication_refs() const;

 private:
  std::size_t dim_;
  std::vector<IndexedDocument> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
  bool frozen_ = false;
};

class Embedder;

struct DocumentInput {
  std::string id;
  Document doc;
};

VectorIndex build_index(std::span<const DocumentInput> docs, const Embedder& embedder);

/// One document per entity, relation and publication node in the store.
VectorIndex embed_and_index_graph(const GraphStore& store, const Vocabulary& vocab, const Embedder& embedder);

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "KGV1", u32 dim, u32 count, then per document (sorted by id): u8 class,
/// length-prefixed strings (id, then class fields), dim little-endian f32.
std::string write_snapshot(const VectorIndex& index);
VectorIndex read_snapshot(std::string_view bytes);

}  // namespace kgrag
