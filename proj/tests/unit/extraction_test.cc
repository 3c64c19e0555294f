#include "kgrag/extraction.h"

#include <gtest/gtest.h>

#include <atomic>
#include <mutex>
#include <random>

#include "kgrag/text_util.h"
#include "support/fixtures.h"

namespace kgrag {
namespace {

using testing::spec;

constexpr std::string_view kListingOutput =
    "{'relation_type': 'affect', 'entity1_type': 'disease', 'entity1_name': 'AMD', 'entity2_type': 'body_part', "
    "'entity2_name': 'retina'}\n"
    "{'relation_type': 'cause', 'entity1_type': 'disease', 'entity1_name': 'AMD', 'entity2_type': 'symptom', "
    "'entity2_name': 'vision loss'}\n";

TEST(ParseRelationOutput, ReadsTheDocumentedFormat) {
  auto r = parse_relation_output(kListingOutput, "P1");
  ASSERT_EQ(r.relations.size(), 2u);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_EQ(r.relations[0], (RawRelation{"affect", "disease", "AMD", "body_part", "retina", "P1"}));
  EXPECT_EQ(r.relations[1].entity2_name, "vision loss");
}

TEST(ParseRelationOutput, AcceptsDoubleQuotesAndTrailingComma) {
  auto r = parse_relation_output(
      R"({"relation_type": "treat", "entity1_type": "treatment", "entity1_name": "ranibizumab", )"
      R"("entity2_type": "disease", "entity2_name": "wet AMD",})",
      "P");
  ASSERT_EQ(r.relations.size(), 1u);
  EXPECT_EQ(r.relations[0].entity1_name, "ranibizumab");
}

TEST(ParseRelationOutput, ApostropheInsideDoubleQuotedValue) {
  auto r = parse_relation_output(
      R"({'relation_type': 'cause', 'entity1_type': 'gene', 'entity1_name': "Bruch's membrane gene", )"
      R"('entity2_type': 'disease', 'entity2_name': 'AMD'})",
      "P");
  ASSERT_EQ(r.relations.size(), 1u);
  EXPECT_EQ(r.relations[0].entity1_name, "Bruch's membrane gene");
}

TEST(ParseRelationOutput, JunkLinesBecomeFailuresNotExceptions) {
  std::string text = "Here are the relations:\n";
  text += kListingOutput;
  text += "{'relation_type': 'cause', 'entity1_type': 'gene'\n";
  text += "{'relation_type': 'cause'}\n";
  text += "```\n";
  auto r = parse_relation_output(text, "P9");
  EXPECT_EQ(r.relations.size(), 2u);
  ASSERT_EQ(r.failures.size(), 4u);
  for (const auto& f : r.failures) {
    EXPECT_EQ(f.publication_id, "P9");
    EXPECT_FALSE(f.reason.empty());
  }
  EXPECT_EQ(r.failures[2].reason, "missing key 'entity1_type'");
}

TEST(ParseRelationOutput, SeveralGroupsOnOneLine) {
  std::string line(kListingOutput);
  line[line.find('\n')] = ' ';
  auto r = parse_relation_output(line, "P");
  EXPECT_EQ(r.relations.size(), 2u);
}

TEST(ParseRelationOutput, RejectsUnknownAndDuplicateKeys) {
  auto r = parse_relation_output(
      "{'relation_type': 'cause', 'entity1_type': 'gene', 'entity1_name': 'x', 'entity2_type': 'disease', "
      "'entity2_name': 'y', 'confidence': '0.9'}\n"
      "{'relation_type': 'cause', 'relation_type': 'cause', 'entity1_type': 'gene', 'entity1_name': 'x', "
      "'entity2_type': 'disease', 'entity2_name': 'y'}",
      "P");
  EXPECT_TRUE(r.relations.empty());
  ASSERT_EQ(r.failures.size(), 2u);
  EXPECT_NE(r.failures[0].reason.find("confidence"), std::string::npos);
  EXPECT_NE(r.failures[1].reason.find("duplicate"), std::string::npos);
}

// Random bytes, weighted toward the characters the grammar cares about.
std::string random_bytes(std::mt19937_64& rng) {
  static const std::string alphabet = "{}'\":, \n\\abcdeNCT_0123456789relation_typeentity";
  std::uniform_int_distribution<int> len(0, 200);
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::size_t> alpha(0, alphabet.size() - 1);
  std::string s(static_cast<std::size_t>(len(rng)), '\0');
  for (auto& c : s) c = pick(rng) < 6 ? alphabet[alpha(rng)] : static_cast<char>(byte(rng));
  return s;
}

TEST(ParseRelationOutput, TotalOnRandomInput) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    auto input = random_bytes(rng);
    auto r = parse_relation_output(input, "F");
    for (const auto& rel : r.relations) {
      EXPECT_FALSE(text::trim(rel.relation_type).empty());
      EXPECT_EQ(rel.publication_id, "F");
    }
  }
}

std::string random_value(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {"a", "Z", " ", "'", "\"", "\\", "\n", "\r", "{", "}", ",", ":",
                                                  "\t", "\xC3\xA9", "\xE2\x86\x92", "NCT01291121", "x y"};
  std::uniform_int_distribution<std::size_t> n(1, 12), p(0, pieces.size() - 1);
  std::string v;
  do {
    v.clear();
    for (std::size_t i = n(rng); i > 0; --i) v += pieces[p(rng)];
  } while (text::trim(v).empty());
  return v;
}

TEST(SerializeRelation, RoundTripsThroughParser) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    RawRelation r{random_value(rng), random_value(rng), random_value(rng), random_value(rng), random_value(rng), "P"};
    auto line = serialize_relation(r);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    auto parsed = parse_relation_output(line, "P");
    ASSERT_EQ(parsed.relations.size(), 1u) << line;
    EXPECT_EQ(parsed.relations[0], r);
  }
}

TEST(ValidateRelation, ChecksEachLabel) {
  RawRelation ok{"cause", "disease", "AMD", "symptom", "vision loss", "P"};
  EXPECT_TRUE(std::holds_alternative<ValidatedRelation>(validate_relation(ok, spec())));

  auto bad = ok;
  bad.entity1_type = "Disease";
  auto v = validate_relation(bad, spec());
  ASSERT_TRUE(std::holds_alternative<Rejection>(v));
  EXPECT_EQ(std::get<Rejection>(v).field, RejectedField::kEntity1Type);

  bad = ok;
  bad.relation_type = "causes";
  EXPECT_EQ(std::get<Rejection>(validate_relation(bad, spec())).field, RejectedField::kRelationType);
  bad = ok;
  bad.entity2_type = "organ";
  EXPECT_EQ(std::get<Rejection>(validate_relation(bad, spec())).field, RejectedField::kEntity2Type);
}

// Fails the first `failures` calls, then answers with `response`.
class FlakyClient : public ChatCompletionClient {
 public:
  FlakyClient(int failures, std::string response) : failures_(failures), response_(std::move(response)) {}
  std::string complete(const CompletionRequest& request) override {
    std::lock_guard lock(mu_);
    requests.push_back(request);
    if (calls_++ < failures_) throw TransportError(503, "unavailable");
    return response_;
  }
  void stream(const CompletionRequest& request, const DeltaCallback& cb) override { cb(complete(request)); }

  std::vector<CompletionRequest> requests;

 private:
  std::mutex mu_;
  int failures_;
  int calls_ = 0;
  std::string response_;
};

ExtractionOptions fast_options(std::vector<std::chrono::milliseconds>* sleeps = nullptr) {
  ExtractionOptions o;
  o.retry.sleep = [sleeps](std::chrono::milliseconds d) {
    if (sleeps) sleeps->push_back(d);
  };
  return o;
}

TEST(ExtractFromAbstract, SendsPromptAndAbstract) {
  FlakyClient client(0, std::string(kListingOutput));
  AbstractRecord rec{"NCT00000001", "AMD affects the retina and causes vision loss.", std::nullopt};
  auto report = extract_from_abstract(rec, client, spec(), fast_options());
  EXPECT_EQ(report.relation_count, 2u);
  ASSERT_EQ(client.requests.size(), 1u);
  const auto& msgs = client.requests[0].messages;
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(msgs[0].role, "system");
  EXPECT_EQ(msgs[0].content, build_extraction_prompt(spec(), PromptMode::kFewShot));
  EXPECT_EQ(msgs[1].content, "Text: \"AMD affects the retina and causes vision loss.\"\nOutput:");
  EXPECT_EQ(client.requests[0].temperature, 0.0);
  EXPECT_EQ(client.requests[0].max_tokens, 1024);
}

TEST(ExtractFromAbstract, RetriesWithExponentialBackoff) {
  std::vector<std::chrono::milliseconds> sleeps;
  FlakyClient client(2, std::string(kListingOutput));
  auto report = extract_from_abstract({"P", "text", std::nullopt}, client, spec(), fast_options(&sleeps));
  ASSERT_EQ(report.abstracts.size(), 1u);
  EXPECT_TRUE(report.abstracts[0].ok);
  EXPECT_EQ(report.abstracts[0].attempts, 3);
  EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1000),
                                                            std::chrono::milliseconds(2000)}));
  EXPECT_EQ(report.relation_count, 2u);
}

TEST(ExtractFromAbstract, GivesUpAfterMaxAttempts) {
  FlakyClient client(100, "");
  auto report = extract_from_abstract({"P", "text", std::nullopt}, client, spec(), fast_options());
  EXPECT_FALSE(report.abstracts[0].ok);
  EXPECT_EQ(report.abstracts[0].attempts, 3);
  EXPECT_EQ(report.failed_abstract_count(), 1u);
  EXPECT_NE(report.abstracts[0].error.find("unavailable"), std::string::npos);
}

TEST(ExtractCorpus, MergesInCorpusOrderRegardlessOfWorkers) {
  FlakyClient client(0, std::string(kListingOutput));
  std::vector<AbstractRecord> corpus;
  for (int i = 0; i < 17; ++i) corpus.push_back({"P" + std::to_string(i), "t", std::nullopt});
  auto serial_opts = fast_options();
  serial_opts.workers = 1;
  auto parallel_opts = fast_options();
  parallel_opts.workers = 6;
  auto serial = extract_corpus(corpus, client, spec(), serial_opts);
  auto parallel = extract_corpus(corpus, client, spec(), parallel_opts);
  EXPECT_EQ(serial.relations, parallel.relations);
  ASSERT_EQ(parallel.relations.size(), 34u);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(parallel.relations[2 * i].publication_id, corpus[i].publication_id);
  }
}

TEST(ParseCorpusJsonl, ValidatesRecords) {
  auto corpus = parse_corpus_jsonl(
      "{\"publication_id\": \"P1\", \"text\": \"a\"}\n\n{\"publication_id\": \"P2\", \"text\": \"b\", "
      "\"source_url\": \"https://x\"}\n");
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[1].source_url, "https://x");
  try {
    parse_corpus_jsonl("{\"publication_id\": \"P1\", \"text\": \"a\"}\n{\"text\": \"b\"}\n");
    FAIL();
  } catch (const CorpusFormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_corpus_jsonl("not json\n"), CorpusFormatError);
}

TEST(ExtractionReportJson, RoundTripsRelations) {
  FlakyClient client(0, std::string(kListingOutput) + "junk\n{'relation_type': 'cause', 'entity1_type': "
                                                      "'Disease', 'entity1_name': 'a', 'entity2_type': 'disease', "
                                                      "'entity2_name': 'b'}\n");
  auto report = extract_corpus(std::vector<AbstractRecord>{{"P", "t", std::nullopt}}, client, spec(), fast_options());
  EXPECT_EQ(report.rejections.size(), 1u);
  EXPECT_EQ(report.parse_failures.size(), 1u);
  auto back = report_from_json(report_to_json(report), spec());
  EXPECT_EQ(back.relations, report.relations);
  EXPECT_EQ(back.abstract_count, 1u);
  EXPECT_EQ(report_to_json(back), report_to_json(report));
}

}  // namespace
}  // namespace kgrag
