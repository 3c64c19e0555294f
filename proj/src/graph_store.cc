#include "kgrag/graph_store.h"

#include <algorithm>
#include <stdexcept>

namespace kgrag {
namespace {

template <typename Map, typename Key>
std::vector<const rdf::Triple*> lookup(const Map& index, const Key& key) {
  std::vector<const rdf::Triple*> out;
  auto [b, e] = index.equal_range(key);
  for (auto it = b; it != e; ++it) out.push_back(it->second);
  return out;
}

}  // namespace

GraphStore::GraphStore(const GraphStore& other) : triples_(other.triples_), sealed_(other.sealed_) {
  rebuild_indexes();
}

GraphStore& GraphStore::operator=(const GraphStore& other) {
  if (this != &other) {
    triples_ = other.triples_;
    sealed_ = other.sealed_;
    rebuild_indexes();
  }
  return *this;
}

void GraphStore::rebuild_indexes() {
  by_subject_.clear();
  by_predicate_.clear();
  by_object_.clear();
  for (const auto& t : triples_) {
    by_subject_.emplace(t.subject, &t);
    by_predicate_.emplace(t.predicate, &t);
    by_object_.emplace(t.object, &t);
  }
}

bool GraphStore::insert(rdf::Triple triple) {
  if (sealed_) throw std::logic_error("GraphStore is sealed");
  auto [it, inserted] = triples_.insert(std::move(triple));
  if (!inserted) return false;
  const rdf::Triple* p = &*it;
  by_subject_.emplace(p->subject, p);
  by_predicate_.emplace(p->predicate, p);
  by_object_.emplace(p->object, p);
  return true;
}

std::size_t GraphStore::insert_all(std::span<const rdf::Triple> triples) {
  std::size_t added = 0;
  for (const auto& t : triples) added += insert(t);
  return added;
}

std::vector<const rdf::Triple*> GraphStore::with_subject(const rdf::Iri& subject) const {
  return lookup(by_subject_, subject);
}

std::vector<const rdf::Triple*> GraphStore::with_predicate(const rdf::Iri& predicate) const {
  return lookup(by_predicate_, predicate);
}

std::vector<const rdf::Triple*> GraphStore::with_object(const rdf::Term& object) const {
  return lookup(by_object_, object);
}

std::vector<rdf::Term> GraphStore::objects(const rdf::Iri& subject, const rdf::Iri& predicate) const {
  std::vector<rdf::Term> out;
  for (const auto* t : with_subject(subject)) {
    if (t->predicate == predicate) out.push_back(t->object);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<rdf::Iri> GraphStore::subjects(const rdf::Iri& predicate, const rdf::Term& object) const {
  std::vector<rdf::Iri> out;
  for (const auto* t : with_object(object)) {
    if (t->predicate == predicate) out.push_back(t->subject);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string serialize_ntriples(const GraphStore& store) {
  std::vector<std::string> lines;
  lines.reserve(store.size());
  for (const auto& t : store.triples()) lines.push_back(rdf::to_ntriples_line(t));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

GraphStore load_ntriples(std::string_view text) {
  GraphStore store;
  for (auto& t : rdf::parse_ntriples(text)) store.insert(std::move(t));
  return store;
}

}  // namespace kgrag
