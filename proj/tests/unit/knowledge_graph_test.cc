#include "kgrag/knowledge_graph.h"

#include <gtest/gtest.h>
#include <httplib.h>

#include <thread>

#include "kgrag/llm_client.h"
#include "kgrag/text_util.h"
#include "support/fixtures.h"
#include "support/sparql_grammar.h"

namespace kgrag {
namespace {

using testing::spec;

RefinedRelation relation(const std::string& label, const std::string& s, const std::string& st, const std::string& o,
                         const std::string& ot, const std::string& pub) {
  return {*spec().relation_type(label), {s, *spec().entity_type(st)}, {o, *spec().entity_type(ot)}, pub};
}

RefinedRelation amd_affects_retina() {
  return relation("affect", "age-related macular degeneration", "disease", "retina", "body_part", "NCT01778491");
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Vocabulary, ClassNamesRoundTrip) {
  Vocabulary vocab(spec());
  EXPECT_EQ(vocab.entity_class("risk_factor").str(), "http://purl.org/causalamd/ontology/class/RiskFactor");
  EXPECT_EQ(vocab.entity_label_of_class(vocab.entity_class("risk_factor")), "risk_factor");
  EXPECT_TRUE(vocab.is_entity_class(vocab.entity_class("body_part")));
  EXPECT_FALSE(vocab.is_entity_class(vocab.relation_class()));
}

TEST(MintRelationIri, FrozenHash) {
  Vocabulary vocab(spec());
  EXPECT_EQ(mint_relation_iri(amd_affects_retina(), vocab).str(),
            "http://purl.org/causalamd/relation/3571f2b25ca4599a0187a82383be472b6448e0e98a37f65f65c04900573e4898");
}

TEST(MintRelationIri, DependsOnEveryKeyField) {
  Vocabulary vocab(spec());
  auto base = mint_relation_iri(amd_affects_retina(), vocab);
  auto r = amd_affects_retina();
  r.publication_id = "NCT00000001";
  EXPECT_NE(mint_relation_iri(r, vocab), base);
  r = amd_affects_retina();
  r.relation_type = *spec().relation_type("cause");
  EXPECT_NE(mint_relation_iri(r, vocab), base);
  r = amd_affects_retina();
  std::swap(r.subject.name, r.object.name);
  EXPECT_NE(mint_relation_iri(r, vocab), base);
}

TEST(PercentEncode, KeepsUnreservedOnly) {
  EXPECT_EQ(percent_encode("age-related macular_degeneration.~"), "age-related%20macular_degeneration.~");
  EXPECT_EQ(percent_encode("a/b?c#d<e>\"f"), "a%2Fb%3Fc%23d%3Ce%3E%22f");
  EXPECT_EQ(percent_encode("\xC3\xA9"), "%C3%A9");
}

TEST(RelationToTriples, ElevenTriplesMatchingGolden) {
  Vocabulary vocab(spec());
  auto triples = relation_to_triples(amd_affects_retina(), vocab);
  ASSERT_EQ(triples.size(), 11u);
  auto golden = text::read_file(testing::golden_dir() / "insert_one_relation.rq");
  EXPECT_EQ(to_sparql_insert(triples), golden);
}

TEST(ToSparqlInsert, ConformsToUpdateGrammar) {
  auto fx = testing::build_fixture();
  std::vector<rdf::Triple> triples(fx.store.triples().begin(), fx.store.triples().end());
  auto update = to_sparql_insert(triples);
  auto check = testing::check_sparql_update(update);
  ASSERT_TRUE(check.ok) << check.error << " at " << check.offset;
  EXPECT_EQ(check.triples, fx.store.size());
}

TEST(ToSparqlInsert, EscapesAwkwardLiterals) {
  rdf::Triple t{rdf::Iri("http://e/s"), rdf::Iri("http://e/p"), rdf::Literal{"quote \" back \\ nl \n } .", "", ""}};
  auto update = to_sparql_insert(std::vector<rdf::Triple>{t});
  auto check = testing::check_sparql_update(update);
  EXPECT_TRUE(check.ok) << check.error;
  EXPECT_EQ(check.triples, 1u);
}

TEST(ToSparqlInsert, EmptyInput) {
  EXPECT_EQ(to_sparql_insert({}), "INSERT DATA { }");
  EXPECT_TRUE(testing::check_sparql_update("INSERT DATA { }").ok);
}

TEST(BuildGraph, SharedNodesAreNotDuplicated) {
  Vocabulary vocab(spec());
  std::vector<RefinedRelation> rs = {
      amd_affects_retina(),
      relation("cause", "age-related macular degeneration", "disease", "vision loss", "symptom", "NCT01778491"),
  };
  auto store = build_graph(rs, vocab);
  // 22 minus the repeated subject type/label and publication type/label.
  EXPECT_EQ(store.size(), 18u);
  auto counts = count_nodes(store, vocab);
  EXPECT_EQ(counts.entities, 3u);
  EXPECT_EQ(counts.relations, 2u);
  EXPECT_EQ(counts.publications, 1u);
}

TEST(BuildGraph, FixtureCounts) {
  auto fx = testing::build_fixture();
  Vocabulary vocab(spec());
  auto counts = count_nodes(fx.store, vocab);
  EXPECT_EQ(counts.entities, 17u);
  EXPECT_EQ(counts.relations, 12u);
  EXPECT_EQ(counts.publications, 3u);
  EXPECT_EQ(fx.store.size(), 100u);
  for (const auto& r : fx.refined.relations) {
    for (const auto& t : relation_to_triples(r, vocab)) EXPECT_TRUE(fx.store.contains(t));
  }
}

TEST(QueryRelationsForEntity, BothDirectionsSortedAndLimited) {
  Vocabulary vocab(spec());
  std::vector<RefinedRelation> rs = {
      amd_affects_retina(),
      relation("cause", "smoking", "risk_factor", "age-related macular degeneration", "disease", "P2"),
      relation("cause", "smoking", "risk_factor", "lung cancer", "disease", "P3"),
  };
  auto store = build_graph(rs, vocab);
  auto rows = query_relations_for_entity(store, vocab, "age-related macular degeneration", 10);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LT(rows[0].relation, rows[1].relation);
  for (const auto& row : rows) {
    EXPECT_TRUE(row.subject == "age-related macular degeneration" || row.object == "age-related macular degeneration");
  }
  EXPECT_EQ(query_relations_for_entity(store, vocab, "age-related macular degeneration", 1).size(), 1u);
  EXPECT_TRUE(query_relations_for_entity(store, vocab, "unknown", 10).empty());
  auto smoking = query_relations_for_entity(store, vocab, "smoking", 10);
  ASSERT_EQ(smoking.size(), 2u);
  EXPECT_EQ(smoking[0].predicate, "cause");
}

class FakeSparqlEndpoint {
 public:
  explicit FakeSparqlEndpoint(int status) : status_(status) {
    server_.Post("/update", [this](const httplib::Request& req, httplib::Response& res) {
      content_type_ = req.get_header_value("Content-Type");
      authorization_ = req.get_header_value("Authorization");
      body_ = req.body;
      res.status = status_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeSparqlEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/update"; }

  std::string content_type_, authorization_, body_;

 private:
  int status_;
  int port_ = 0;
  httplib::Server server_;
  std::thread thread_;
};

TEST(PushToEndpoint, PostsUpdateWithBasicAuth) {
  FakeSparqlEndpoint fake(204);
  auto ack = push_to_endpoint("INSERT DATA { }", {fake.url(), "user", "pw"});
  EXPECT_EQ(ack.status, 204);
  EXPECT_EQ(fake.content_type_, "application/sparql-update");
  EXPECT_EQ(fake.authorization_, "Basic dXNlcjpwdw==");
  EXPECT_EQ(fake.body_, "INSERT DATA { }");
}

TEST(PushToEndpoint, ErrorStatusIsTransportError) {
  FakeSparqlEndpoint fake(500);
  try {
    push_to_endpoint("INSERT DATA { }", {fake.url(), "", ""});
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 500);
  }
  EXPECT_TRUE(fake.authorization_.empty());
}

TEST(PushToEndpoint, BadUrlIsTransportError) {
  EXPECT_THROW(push_to_endpoint("INSERT DATA { }", {"not a url", "", ""}), TransportError);
}

}  // namespace
}  // namespace kgrag
