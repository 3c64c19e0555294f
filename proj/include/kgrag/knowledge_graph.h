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

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/graph_store.h"
#include "kgrag/ontology.h"
#include "kgrag/rdf.h"
#include "kgrag/refinement.h"

namespace kgrag {

/// IRIs of the graph vocabulary, all rooted at the ontology's base IRI:
///
///   <base>ontology/Relation, <base>ontology/Publication, <base>ontology/class/<EntityClass>
///   <base>ontology/hasSubject, hasObject, hasPredicate
///   <base>relation/<sha256 hex>, <base>entity/<pct-encoded name>,
///   <base>publication/<pct-encoded id>
class Vocabulary {
 public:
  explicit Vocabulary(std::string base_iri);
  explicit Vocabulary(const OntologySpec& spec) : Vocabulary(spec.base_iri()) {}

  const std::string& base() const noexcept { return base_; }

  rdf::Iri relation_class() const;
  rdf::Iri publication_class() const;
  /// "risk_factor" -> <base>ontology/RiskFactor
  rdf::Iri entity_class(std::string_view entity_label) const;
  rdf::Iri has_subject() const;
  rdf::Iri has_object() const;
  rdf::Iri has_predicate() const;

  rdf::Iri entity(std::string_view canonical_name) const;
  rdf::Iri publication(std::string_view publication_id) const;

  bool is_entity_class(const rdf::Iri& iri) const;
  /// Inverse of entity_class(): "RiskFactor" -> "risk_factor".
  std::string entity_label_of_class(const rdf::Iri& iri) const;

 private:
  rdf::Iri term(std::string_view local) const;

  std::string base_;
};

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

/// The string hashed into a relation IRI: the four key fields joined with
/// U+001F (unit separator).
std::string canonical_relation_key(const RefinedRelation& relation);

/// <base>relation/<sha256_hex(canonical_relation_key(r))>
rdf::Iri mint_relation_iri(const RefinedRelation& relation, const Vocabulary& vocab);

/// Percent-encodes everything outside RFC 3986 unreserved characters.
std::string percent_encode(std::string_view s);

/// The reified pattern for one relation (11 triples):
///   rel a Relation; rel hasSubject s; rel hasPredicate "label"; rel hasObject o;
///   s a Class; s rdfs:label "name"; o a Class; o rdfs:label "name";
///   rel prov:wasDerivedFrom pub; pub a Publication; pub rdfs:label "id".
std::vector<rdf::Triple> relation_to_triples(const RefinedRelation& relation, const Vocabulary& vocab);

GraphStore build_graph(std::span<const RefinedRelation> relations, const Vocabulary& vocab);

/// A single SPARQL 1.1 `INSERT DATA { ... }` update. Empty input yields
/// "INSERT DATA { }".
std::string to_sparql_insert(std::span<const rdf::Triple> triples);

struct RelationRow {
  rdf::Iri relation;
  std::string predicate;
  std::string subject;
  std::string object;
  std::string publication_id;

  bool operator==(const RelationRow&) const = default;
};

/// Relations whose subject or object entity is labelled `canonical_name`,
/// ordered by relation IRI and cut at `limit`.
std::vector<RelationRow> query_relations_for_entity(const GraphStore& store, const Vocabulary& vocab,
                                                    std::string_view canonical_name, std::size_t limit);

struct NodeCounts {
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t publications = 0;
};
NodeCounts count_nodes(const GraphStore& store, const Vocabulary& vocab);

struct SparqlEndpoint {
  std::string url;
  std::string username;
  std::string password;
  std::chrono::seconds timeout{60};
};

struct EndpointAck {
  int status = 0;
  std::string body;
};

/// POSTs `update` as application/sparql-update. Throws TransportError (see
/// llm_client.h) on network failure or a non-2xx status.
EndpointAck push_to_endpoint(std::string_view update, const SparqlEndpoint& endpoint);

}  // namespace kgrag
