#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kgrag/extraction.h"
#include "kgrag/graph_store.h"
#include "kgrag/knowledge_graph.h"
#include "kgrag/ontology.h"
#include "kgrag/refinement.h"
#include "kgrag/vector_index.h"

namespace kgrag::testing {

std::filesystem::path source_dir();
std::filesystem::path cli_path();
std::filesystem::path ontology_path();
std::filesystem::path corpus_path();
std::filesystem::path mock_dir();
std::filesystem::path golden_dir();

const OntologySpec& spec();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// The bundled three-abstract corpus taken through the scripted extraction
/// backend, refinement, graph building and the hashing embedder, in process.
struct FixtureArtifacts {
  ExtractionReport report;
  RefinementResult refined;
  GraphStore store;
  VectorIndex index;
};
FixtureArtifacts build_fixture();

}  // namespace kgrag::testing
