#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "kgrag/rdf.h"

namespace kgrag {

/// In-process triple store with set semantics and subject / predicate /
/// object indexes. Load it, call seal(), then share it read-only.
class GraphStore {
 public:
  GraphStore() = default;
  GraphStore(const GraphStore& other);
  GraphStore& operator=(const GraphStore& other);
  GraphStore(GraphStore&&) noexcept = default;
  GraphStore& operator=(GraphStore&&) noexcept = default;

  /// Returns false when the triple was already present. Throws
  /// std::logic_error once sealed.
  bool insert(rdf::Triple triple);
  std::size_t insert_all(std::span<const rdf::Triple> triples);

  void seal() noexcept { sealed_ = true; }
  bool sealed() const noexcept { return sealed_; }

  bool contains(const rdf::Triple& triple) const { return triples_.count(triple) != 0; }
  std::size_t size() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return triples_.empty(); }

  /// All triples in (subject, predicate, object) order.
  const std::set<rdf::Triple>& triples() const noexcept { return triples_; }

  std::vector<const rdf::Triple*> with_subject(const rdf::Iri& subject) const;
  std::vector<const rdf::Triple*> with_predicate(const rdf::Iri& predicate) const;
  std::vector<const rdf::Triple*> with_object(const rdf::Term& object) const;

  /// Objects of (subject, predicate, *).
  std::vector<rdf::Term> objects(const rdf::Iri& subject, const rdf::Iri& predicate) const;
  /// Subjects of (*, predicate, object).
  std::vector<rdf::Iri> subjects(const rdf::Iri& predicate, const rdf::Term& object) const;

  bool operator==(const GraphStore& other) const { return triples_ == other.triples_; }

 private:
  void rebuild_indexes();

  std::set<rdf::Triple> triples_;
  std::multimap<rdf::Iri, const rdf::Triple*> by_subject_;
  std::multimap<rdf::Iri, const rdf::Triple*> by_predicate_;
  std::multimap<rdf::Term, const rdf::Triple*> by_object_;
  bool sealed_ = false;
};

/// Canonical N-Triples: one line per triple, lines sorted bytewise.
std::string serialize_ntriples(const GraphStore& store);
GraphStore load_ntriples(std::string_view text);

}  // namespace kgrag
