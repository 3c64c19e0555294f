#include "support/fixtures.h"

#include <atomic>
#include <random>

#include "kgrag/embedder.h"
#include "kgrag/llm_client.h"
#include "kgrag/text_util.h"

namespace kgrag::testing {

std::filesystem::path source_dir() { return KGRAG_SOURCE_DIR; }
std::filesystem::path cli_path() { return KGRAG_CLI_PATH; }
std::filesystem::path ontology_path() { return source_dir() / "data" / "causal_amd.ontology"; }
std::filesystem::path corpus_path() { return source_dir() / "data" / "fixtures" / "corpus.jsonl"; }
std::filesystem::path mock_dir() { return source_dir() / "data" / "mock"; }
std::filesystem::path golden_dir() { return source_dir() / "tests" / "golden"; }

const OntologySpec& spec() {
  static const OntologySpec s = OntologySpec::load(ontology_path());
  return s;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("kgrag_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

FixtureArtifacts build_fixture() {
  ScriptedChatClient client(ScriptedChatClient::load_script(mock_dir() / "extraction.json"));
  auto corpus = parse_corpus_jsonl(text::read_file(corpus_path()));
  ExtractionOptions options;
  options.workers = 2;
  options.retry.sleep = [](std::chrono::milliseconds) {};
  FixtureArtifacts out;
  out.report = extract_corpus(corpus, client, spec(), options);
  out.refined = refine(out.report, spec());
  Vocabulary vocab(spec());
  out.store = build_graph(out.refined.relations, vocab);
  out.store.seal();
  HashingEmbedder embedder;
  out.index = embed_and_index_graph(out.store, vocab, embedder);
  out.index.freeze();
  return out;
}

}  // namespace kgrag::testing
