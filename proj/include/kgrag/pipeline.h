#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "kgrag/chat_server.h"
#include "kgrag/context_builder.h"
#include "kgrag/embedder.h"
#include "kgrag/extraction.h"
#include "kgrag/knowledge_graph.h"
#include "kgrag/llm_client.h"
#include "kgrag/ontology.h"
#include "kgrag/refinement.h"

namespace kgrag {

/// Bad flag combinations or missing settings. Maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or malformed input files. Maps to exit code 3.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitTransport = 4;

/// Settings shared by all stages. Precedence, lowest first: defaults, config
/// file, environment, command-line flags.
struct PipelineConfig {
  std::filesystem::path ontology = "data/causal_amd.ontology";

  // Extraction backend.
  std::string endpoint_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4o-mini";
  std::string api_key;
  PromptMode prompt_mode = kDefaultPromptMode;
  int max_retries = 3;
  std::size_t workers = 4;

  // Chat backend.
  std::string llm_url = "http://localhost:11434/v1";
  std::string llm_model = "deepseek-r1:7b";

  // Embeddings.
  std::string embed_url;
  bool fallback_embedder = false;
  std::size_t embedding_dim = kDefaultEmbeddingDim;

  // Triple store.
  std::string sparql_url;
  std::string sparql_user;
  std::string sparql_password;

  RetrievalConfig retrieval;
  std::string bind_addr = "127.0.0.1:8080";
  std::optional<std::filesystem::path> session_dir;

  bool mock = false;
  std::filesystem::path mock_dir = "data/mock";
};

/// Overlays keys present in a JSON config document. Throws InputError.
void apply_config_json(PipelineConfig& cfg, std::string_view json_text);

/// Overlays ENDPOINT_URL, MODEL_NAME, MAX_RETRIES, WORKERS, LLM_URL,
/// LLM_MODEL, LLM_API_KEY, EMBED_URL, FALLBACK_EMBEDDER, BIND_ADDR,
/// K_ENTITIES, K_RELATIONS, SPARQL_URL. `getenv` is injectable for tests.
void apply_env(PipelineConfig& cfg,
               const std::function<std::optional<std::string>(const char*)>& getenv = {});

/// "host:port" -> pair. Throws UsageError.
std::pair<std::string, int> parse_bind_addr(std::string_view addr);

OntologySpec load_ontology(const PipelineConfig& cfg);
std::shared_ptr<const Embedder> make_embedder(const PipelineConfig& cfg);

/// With cfg.mock these read extraction.json / chat.json from cfg.mock_dir.
std::shared_ptr<ChatCompletionClient> make_extraction_client(const PipelineConfig& cfg);
std::shared_ptr<ChatCompletionClient> make_chat_client(const PipelineConfig& cfg);

ExtractionOptions extraction_options(const PipelineConfig& cfg);
ChatOptions chat_options(const PipelineConfig& cfg);

// Stages. Each reads the previous stage's file and writes its own.

ExtractionReport run_extract(const PipelineConfig& cfg, const std::filesystem::path& corpus,
                             const std::filesystem::path& out, ChatCompletionClient& client);
RefinementResult run_refine(const PipelineConfig& cfg, const std::filesystem::path& in,
                            const std::filesystem::path& out);

struct LoadResult {
  GraphStore store;
  std::string sparql;
  std::optional<EndpointAck> ack;
};
LoadResult run_load(const PipelineConfig& cfg, const std::filesystem::path& in, const std::filesystem::path& export_path,
                    const std::optional<std::filesystem::path>& sparql_out);

VectorIndex run_index(const PipelineConfig& cfg, const std::filesystem::path& graph,
                      const std::filesystem::path& snapshot);

/// Reads a graph export and an index snapshot into a sealed, frozen pair.
ServingState load_serving_state(const std::filesystem::path& graph, const std::filesystem::path& snapshot);

}  // namespace kgrag
