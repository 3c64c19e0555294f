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

#include "kgrag/vector_index.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <set>

#include "kgrag/embedder.h"

namespace kgrag {
namespace {

const rdf::Iri& rdf_type() {
  static const rdf::Iri iri{std::string(rdf::kRdfType)};
  return iri;
}

std::string label_of(const GraphStore& store, const rdf::Iri& node) {
  static const rdf::Iri label{std::string(rdf::kRdfsLabel)};
  for (const auto& t : store.objects(node, label)) {
    if (const auto* lit = std::get_if<rdf::Literal>(&t)) return lit->lexical;
  }
  return {};
}

template <typename T>
double dot(std::span<const double> a, std::span<const T> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * static_cast<double>(b[i]);
  return s;
}

template <typename T>
double l2(std::span<const T> v) {
  double s = 0.0;
  for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

// Little-endian encoding helpers.
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw SnapshotError("snapshot truncated");
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace

DimensionMismatch::DimensionMismatch(std::size_t expected, std::size_t actual)
    : std::invalid_argument("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                            std::to_string(actual)) {}

bool EmbeddingVector::is_zero() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

bool EmbeddingVector::is_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double EmbeddingVector::norm() const noexcept { return l2(values()); }

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
  if (a.is_zero() || b.is_zero()) throw ZeroVector();
  return clamp_unit(dot(a.values(), b.values()) / (a.norm() * b.norm()));
}

std::string_view to_string(DocClass c) {
  switch (c) {
    case DocClass::kEntity: return "Entity";
    case DocClass::kRelation: return "Relation";
    case DocClass::kPublication: return "Publication";
  }
  return "Entity";
}

DocClass class_of(const Document& doc) {
  return static_cast<DocClass>(doc.index());
}

std::string document_text(const Document& doc) {
  if (const auto* e = std::get_if<EntityDoc>(&doc)) return e->name + " (" + e->entity_type + ")";
  if (const auto* r = std::get_if<RelationDoc>(&doc)) return r->subject + " " + r->predicate + " " + r->object;
  return std::get<PublicationDoc>(doc).publication_id;
}

VectorIndex::VectorIndex(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("index dimension must be positive");
}

const std::string& VectorIndex::index_document(std::string id, Document doc, const EmbeddingVector& vector) {
  if (frozen_) throw std::logic_error("VectorIndex is frozen");
  if (vector.dim() != dim_) throw DimensionMismatch(dim_, vector.dim());
  if (!vector.is_finite()) throw NonFiniteVector();
  std::vector<float> stored(vector.values().begin(), vector.values().end());
  if (std::all_of(stored.begin(), stored.end(), [](float v) { return v == 0.0f; })) throw ZeroVector();
  if (!std::all_of(stored.begin(), stored.end(), [](float v) { return std::isfinite(v); })) throw NonFiniteVector();

  IndexedDocument entry{std::move(id), std::move(doc), std::move(stored), 0.0};
  entry.norm = l2(std::span<const float>(entry.vector));
  auto it = by_id_.find(entry.id);
  if (it != by_id_.end()) {
    docs_[it->second] = std::move(entry);
    return docs_[it->second].id;
  }
  by_id_.emplace(entry.id, docs_.size());
  docs_.push_back(std::move(entry));
  return docs_.back().id;
}

const IndexedDocument* VectorIndex::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

std::size_t VectorIndex::count(DocClass c) const {
  return static_cast<std::size_t>(
      std::count_if(docs_.begin(), docs_.end(), [c](const auto& d) { return class_of(d.doc) == c; }));
}

std::vector<SearchHit> VectorIndex::search(const EmbeddingVector& query, std::size_t k,
                                           std::optional<DocClass> filter) const {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  if (query.dim() != dim_) throw DimensionMismatch(dim_, query.dim());
  if (query.is_zero()) throw ZeroVector();
  const double qn = query.norm();

  std::vector<SearchHit> hits;
  hits.reserve(docs_.size());
  for (const auto& d : docs_) {
    DocClass c = class_of(d.doc);
    if (filter && c != *filter) continue;
    double score = clamp_unit(dot(query.values(), std::span<const float>(d.vector)) / (qn * d.norm));
    hits.push_back({d.id, score, c});
  }
  auto better = [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  };
  std::size_t n = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), better);
  hits.resize(n);
  return hits;
}

std::vector<std::string> VectorIndex::dangling_publication_refs() const {
  std::vector<std::string> out;
  for (const auto& d : docs_) {
    if (const auto* r = std::get_if<RelationDoc>(&d.doc)) {
      const auto* target = find(r->publication_ref);
      if (!target || class_of(target->doc) != DocClass::kPublication) out.push_back(d.id);
    }
  }
  return out;
}

VectorIndex build_index(std::span<const DocumentInput> docs, const Embedder& embedder) {
  VectorIndex index(embedder.dim());
  for (const auto& d : docs) index.index_document(d.id, d.doc, embedder.embed(document_text(d.doc)));
  return index;
}

VectorIndex embed_and_index_graph(const GraphStore& store, const Vocabulary& vocab, const Embedder& embedder) {
  std::map<rdf::Iri, Document> nodes;
  const auto relation_class = vocab.relation_class();
  const auto publication_class = vocab.publication_class();
  for (const auto* t : store.with_predicate(rdf_type())) {
    const auto* cls = std::get_if<rdf::Iri>(&t->object);
    if (!cls || nodes.count(t->subject)) continue;
    if (*cls == relation_class) {
      RelationDoc doc;
      for (const auto& term : store.objects(t->subject, vocab.has_predicate())) {
        if (const auto* lit = std::get_if<rdf::Literal>(&term)) {
          doc.predicate = lit->lexical;
          break;
        }
      }
      auto first_iri = [&](const rdf::Iri& p) -> std::optional<rdf::Iri> {
        for (const auto& term : store.objects(t->subject, p)) {
          if (const auto* iri = std::get_if<rdf::Iri>(&term)) return *iri;
        }
        return std::nullopt;
      };
      if (auto s = first_iri(vocab.has_subject())) doc.subject = label_of(store, *s);
      if (auto o = first_iri(vocab.has_object())) doc.object = label_of(store, *o);
      if (auto p = first_iri(rdf::Iri(std::string(rdf::kProvWasDerivedFrom)))) doc.publication_ref = p->str();
      nodes.emplace(t->subject, std::move(doc));
    } else if (*cls == publication_class) {
      nodes.emplace(t->subject, PublicationDoc{label_of(store, t->subject)});
    } else if (vocab.is_entity_class(*cls)) {
      nodes.emplace(t->subject, EntityDoc{label_of(store, t->subject), vocab.entity_label_of_class(*cls)});
    }
  }
  VectorIndex index(embedder.dim());
  for (auto& [iri, doc] : nodes) {
    auto vec = embedder.embed(document_text(doc));
    index.index_document(iri.str(), std::move(doc), vec);
  }
  return index;
}

std::string write_snapshot(const VectorIndex& index) {
  std::vector<const IndexedDocument*> sorted;
  for (const auto& d : index.documents()) sorted.push_back(&d);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

  std::string out = "KGV1";
  put_u32(out, static_cast<std::uint32_t>(index.dim()));
  put_u32(out, static_cast<std::uint32_t>(sorted.size()));
  for (const auto* d : sorted) {
    out.push_back(static_cast<char>(class_of(d->doc)));
    put_str(out, d->id);
    std::visit(
        [&](const auto& doc) {
          using T = std::decay_t<decltype(doc)>;
          if constexpr (std::is_same_v<T, EntityDoc>) {
            put_str(out, doc.name);
            put_str(out, doc.entity_type);
          } else if constexpr (std::is_same_v<T, RelationDoc>) {
            put_str(out, doc.predicate);
            put_str(out, doc.subject);
            put_str(out, doc.object);
            put_str(out, doc.publication_ref);
          } else {
            put_str(out, doc.publication_id);
          }
        },
        d->doc);
    for (float f : d->vector) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

VectorIndex read_snapshot(std::string_view bytes) {
  Reader r(bytes);
  if (r.raw(4) != "KGV1") throw SnapshotError("bad snapshot magic");
  std::uint32_t dim = r.u32();
  std::uint32_t count = r.u32();
  if (dim == 0) throw SnapshotError("snapshot dimension is zero");
  VectorIndex index(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint8_t cls = r.u8();
    std::string id = r.str();
    Document doc;
    switch (cls) {
      case 0: {
        EntityDoc e;
        e.name = r.str();
        e.entity_type = r.str();
        doc = std::move(e);
        break;
      }
      case 1: {
        RelationDoc rd;
        rd.predicate = r.str();
        rd.subject = r.str();
        rd.object = r.str();
        rd.publication_ref = r.str();
        doc = std::move(rd);
        break;
      }
      case 2: doc = PublicationDoc{r.str()}; break;
      default: throw SnapshotError("unknown document class " + std::to_string(cls));
    }
    std::vector<double> values(dim);
    for (auto& v : values) v = std::bit_cast<float>(r.u32());
    try {
      index.index_document(std::move(id), std::move(doc), EmbeddingVector(std::move(values)));
    } catch (const std::invalid_argument& e) {
      throw SnapshotError(std::string("invalid snapshot record: ") + e.what());
    }
  }
  if (!r.done()) throw SnapshotError("trailing bytes after snapshot records");
  return index;
}

}  // namespace kgrag
