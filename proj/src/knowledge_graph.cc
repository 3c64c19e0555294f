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

#include "kgrag/knowledge_graph.h"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <openssl/evp.h>

#include "http_util.h"
#include "kgrag/llm_client.h"
#include "kgrag/text_util.h"

namespace kgrag {
namespace {

const rdf::Iri& rdf_type() {
  static const rdf::Iri iri{std::string(rdf::kRdfType)};
  return iri;
}
const rdf::Iri& rdfs_label() {
  static const rdf::Iri iri{std::string(rdf::kRdfsLabel)};
  return iri;
}
const rdf::Iri& was_derived_from() {
  static const rdf::Iri iri{std::string(rdf::kProvWasDerivedFrom)};
  return iri;
}

rdf::Literal plain(std::string value) { return rdf::Literal{std::move(value), {}, {}}; }

std::string first_label(const GraphStore& store, const rdf::Iri& node) {
  for (const auto& term : store.objects(node, rdfs_label())) {
    if (const auto* lit = std::get_if<rdf::Literal>(&term)) return lit->lexical;
  }
  return {};
}

std::optional<rdf::Iri> first_iri(const GraphStore& store, const rdf::Iri& node, const rdf::Iri& predicate) {
  for (const auto& term : store.objects(node, predicate)) {
    if (const auto* iri = std::get_if<rdf::Iri>(&term)) return *iri;
  }
  return std::nullopt;
}

}  // namespace

Vocabulary::Vocabulary(std::string base_iri) : base_(std::move(base_iri)) {
  if (!rdf::Iri::is_valid(base_)) throw std::invalid_argument("invalid base IRI: " + base_);
}

rdf::Iri Vocabulary::term(std::string_view local) const { return rdf::Iri(base_ + "ontology/" + std::string(local)); }

rdf::Iri Vocabulary::relation_class() const { return term("Relation"); }
rdf::Iri Vocabulary::publication_class() const { return term("Publication"); }
rdf::Iri Vocabulary::has_subject() const { return term("hasSubject"); }
rdf::Iri Vocabulary::has_object() const { return term("hasObject"); }
rdf::Iri Vocabulary::has_predicate() const { return term("hasPredicate"); }

rdf::Iri Vocabulary::entity_class(std::string_view label) const {
  std::string name;
  bool upper = true;
  for (char c : label) {
    if (c == '_') {
      upper = true;
      continue;
    }
    name.push_back(upper && c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c);
    upper = false;
  }
  return term("class/" + name);
}

bool Vocabulary::is_entity_class(const rdf::Iri& iri) const {
  return iri.str().rfind(base_ + "ontology/class/", 0) == 0;
}

std::string Vocabulary::entity_label_of_class(const rdf::Iri& iri) const {
  std::string_view name(iri.str());
  name.remove_prefix(std::min(name.size(), base_.size() + std::string_view("ontology/class/").size()));
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    char c = name[i];
    if (c >= 'A' && c <= 'Z') {
      if (i) out.push_back('_');
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      out.push_back(c);
    }
  }
  return out;
}

rdf::Iri Vocabulary::entity(std::string_view canonical_name) const {
  return rdf::Iri(base_ + "entity/" + percent_encode(canonical_name));
}

rdf::Iri Vocabulary::publication(std::string_view publication_id) const {
  return rdf::Iri(base_ + "publication/" + percent_encode(publication_id));
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  return text::hex_encode(std::string_view(reinterpret_cast<const char*>(digest), len));
}

std::string canonical_relation_key(const RefinedRelation& r) {
  constexpr char kSep = '\x1f';
  std::string key = r.relation_type.label();
  key += kSep;
  key += r.subject.name;
  key += kSep;
  key += r.object.name;
  key += kSep;
  key += r.publication_id;
  return key;
}

rdf::Iri mint_relation_iri(const RefinedRelation& relation, const Vocabulary& vocab) {
  return rdf::Iri(vocab.base() + "relation/" + sha256_hex(canonical_relation_key(relation)));
}

std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    bool unreserved = text::is_alpha(static_cast<char>(c)) || text::is_digit(static_cast<char>(c)) || c == '-' ||
                      c == '.' || c == '_' || c == '~';
    if (unreserved) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0x0F]);
    }
  }
  return out;
}

std::vector<rdf::Triple> relation_to_triples(const RefinedRelation& r, const Vocabulary& vocab) {
  rdf::Iri rel = mint_relation_iri(r, vocab);
  rdf::Iri subject = vocab.entity(r.subject.name);
  rdf::Iri object = vocab.entity(r.object.name);
  rdf::Iri pub = vocab.publication(r.publication_id);
  return {
      {rel, rdf_type(), vocab.relation_class()},
      {rel, vocab.has_subject(), subject},
      {rel, vocab.has_predicate(), plain(r.relation_type.label())},
      {rel, vocab.has_object(), object},
      {subject, rdf_type(), vocab.entity_class(r.subject.type.label())},
      {subject, rdfs_label(), plain(r.subject.name)},
      {object, rdf_type(), vocab.entity_class(r.object.type.label())},
      {object, rdfs_label(), plain(r.object.name)},
      {rel, was_derived_from(), pub},
      {pub, rdf_type(), vocab.publication_class()},
      {pub, rdfs_label(), plain(r.publication_id)},
  };
}

GraphStore build_graph(std::span<const RefinedRelation> relations, const Vocabulary& vocab) {
  GraphStore store;
  for (const auto& r : relations) store.insert_all(relation_to_triples(r, vocab));
  return store;
}

std::string to_sparql_insert(std::span<const rdf::Triple> triples) {
  if (triples.empty()) return "INSERT DATA { }";
  std::string out = "INSERT DATA {\n";
  for (const auto& t : triples) {
    out += "  ";
    out += rdf::to_ntriples_line(t);
    out += "\n";
  }
  out += "}";
  return out;
}

std::vector<RelationRow> query_relations_for_entity(const GraphStore& store, const Vocabulary& vocab,
                                                    std::string_view canonical_name, std::size_t limit) {
  std::set<rdf::Iri> relations;
  for (const auto& node : store.subjects(rdfs_label(), plain(std::string(canonical_name)))) {
    bool is_entity = false;
    for (const auto& cls : store.objects(node, rdf_type())) {
      if (const auto* iri = std::get_if<rdf::Iri>(&cls); iri && vocab.is_entity_class(*iri)) is_entity = true;
    }
    if (!is_entity) continue;
    for (const auto& rel : store.subjects(vocab.has_subject(), node)) relations.insert(rel);
    for (const auto& rel : store.subjects(vocab.has_object(), node)) relations.insert(rel);
  }

  std::vector<RelationRow> rows;
  for (const auto& rel : relations) {
    if (rows.size() >= limit) break;
    RelationRow row{rel, {}, {}, {}, {}};
    for (const auto& term : store.objects(rel, vocab.has_predicate())) {
      if (const auto* lit = std::get_if<rdf::Literal>(&term)) {
        row.predicate = lit->lexical;
        break;
      }
    }
    if (auto s = first_iri(store, rel, vocab.has_subject())) row.subject = first_label(store, *s);
    if (auto o = first_iri(store, rel, vocab.has_object())) row.object = first_label(store, *o);
    if (auto p = first_iri(store, rel, was_derived_from())) row.publication_id = first_label(store, *p);
    rows.push_back(std::move(row));
  }
  return rows;
}

NodeCounts count_nodes(const GraphStore& store, const Vocabulary& vocab) {
  NodeCounts counts;
  std::set<rdf::Iri> entities;
  auto relation_class = vocab.relation_class();
  auto publication_class = vocab.publication_class();
  for (const auto* t : store.with_predicate(rdf_type())) {
    const auto* cls = std::get_if<rdf::Iri>(&t->object);
    if (!cls) continue;
    if (*cls == relation_class) {
      ++counts.relations;
    } else if (*cls == publication_class) {
      ++counts.publications;
    } else if (vocab.is_entity_class(*cls)) {
      entities.insert(t->subject);
    }
  }
  counts.entities = entities.size();
  return counts;
}

EndpointAck push_to_endpoint(std::string_view update, const SparqlEndpoint& endpoint) {
  http::ParsedUrl url;
  try {
    url = http::parse_url(endpoint.url);
  } catch (const std::invalid_argument& e) {
    throw TransportError(0, e.what());
  }
  auto client = http::make_client(url, endpoint.timeout);
  if (!endpoint.username.empty()) client->set_basic_auth(endpoint.username, endpoint.password);
  auto res = client->Post(url.path, std::string(update), "application/sparql-update");
  if (!res) throw TransportError(0, "SPARQL update failed: " + httplib::to_string(res.error()));
  if (res->status / 100 != 2) {
    throw TransportError(res->status, "SPARQL endpoint returned HTTP " + std::to_string(res->status));
  }
  return {res->status, res->body};
}

}  // namespace kgrag
