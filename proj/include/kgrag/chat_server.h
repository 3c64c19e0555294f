#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "kgrag/embedder.h"
#include "kgrag/extraction.h"
#include "kgrag/graph_store.h"
#include "kgrag/knowledge_graph.h"
#include "kgrag/ontology.h"
#include "kgrag/rag_chat.h"
#include "kgrag/vector_index.h"

namespace kgrag {

/// Sealed store and frozen index served together. Replaced as a unit on
/// ingest; requests already running keep the state they started with.
struct ServingState {
  std::shared_ptr<const GraphStore> store;
  std::shared_ptr<const VectorIndex> index;
};

struct ServiceConfig {
  ChatOptions chat;
  ExtractionOptions extraction;
  bool enable_ingest = false;
  std::optional<std::filesystem::path> session_dir;
};

struct IngestSummary {
  std::size_t abstracts = 0;
  std::size_t failed_abstracts = 0;
  std::size_t relations = 0;
  std::size_t triple_count = 0;
  std::size_t index_size = 0;
};

/// Everything the HTTP layer needs, usable without a socket.
class ChatService {
 public:
  ChatService(OntologySpec spec, ServingState state, std::shared_ptr<const Embedder> embedder,
              std::shared_ptr<ChatCompletionClient> llm, ServiceConfig config);

  ServingState state() const;
  void replace_state(ServingState state);

  SessionStore& sessions() noexcept { return sessions_; }
  const ServiceConfig& config() const noexcept { return config_; }

  ChatOutcome chat(ChatSession& session, std::string_view question,
                   const std::function<void(std::string_view)>& on_chunk);

  /// Extracts, refines and loads a JSONL corpus into a copy of the current
  /// graph, re-indexes it and swaps the result in. Throws CorpusFormatError.
  IngestSummary ingest(std::string_view corpus_jsonl);

 private:
  OntologySpec spec_;
  Vocabulary vocab_;
  std::shared_ptr<const Embedder> embedder_;
  std::shared_ptr<ChatCompletionClient> llm_;
  ServiceConfig config_;
  SessionStore sessions_;
  mutable std::mutex state_mu_;
  ServingState state_;
  std::mutex ingest_mu_;
};

/// HTTP front end:
///   POST /api/chat            {"session_id"?, "question"} -> SSE chunk/done/error
///   GET  /api/health          {"status", "index_size", "triple_count"}
///   GET  /api/session/<id>    session history
///   POST /api/ingest          JSONL corpus (only when enabled)
class ChatServer {
 public:
  explicit ChatServer(ChatService& service);
  ~ChatServer();
  ChatServer(const ChatServer&) = delete;
  ChatServer& operator=(const ChatServer&) = delete;

  /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kgrag
