#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/context_builder.h"
#include "kgrag/llm_client.h"

namespace kgrag {

struct ChatTurn {
  std::string role;  // "user" or "assistant"
  std::string text;
  std::string timestamp;  // ISO-8601 UTC

  bool operator==(const ChatTurn&) const = default;
};

struct ChatSession {
  std::string session_id;
  std::string created_at;
  std::vector<ChatTurn> history;

  void add_turn(std::string role, std::string text);
};

struct HistoryLimits {
  std::size_t max_turns = 8;
  std::size_t max_chars = 2000;
};

/// Completed (user, assistant) exchanges, most recent last, after dropping
/// the oldest ones until both limits hold. A user turn that never got an
/// answer is skipped.
std::vector<ChatTurn> truncate_history(const std::vector<ChatTurn>& history, const HistoryLimits& limits);

struct RagPrompt {
  std::string system;
  std::vector<ChatMessage> messages;  // system first, then history, then the question

  CompletionRequest to_request(const std::string& model, double temperature, int max_tokens) const;
};

/// The assistant instructions with a `{context}` slot.
std::string_view rag_prompt_template();

RagPrompt build_rag_prompt(const ContextBlock& context, const ChatSession& session, std::string_view question,
                           const HistoryLimits& limits = {});

inline constexpr std::string_view kTrialUrlPrefix = "https://app.dimensions.ai/details/clinical_trial/";

/// Wraps every "NCT" + 8 digits (not followed by a further digit) that is not
/// already inside a markdown link as [NCTxxxxxxxx](<prefix>NCTxxxxxxxx).
/// Idempotent.
std::string linkify_trial_ids(std::string_view text);

/// Trial ids in `text` that are not inside a markdown link.
std::vector<std::string> find_bare_trial_ids(std::string_view text);

/// Applies linkify_trial_ids to a token stream. Text is held back until a
/// whitespace boundary outside any (possibly still open) markdown link, so
/// concatenating the output equals linkify_trial_ids of the whole input.
class StreamLinkifier {
 public:
  std::string push(std::string_view chunk);
  std::string finish();

 private:
  std::string pending_;
};

class SessionBusy : public std::runtime_error {
 public:
  explicit SessionBusy(const std::string& id) : std::runtime_error("session " + id + " is busy") {}
};

/// In-memory sessions with optional one-JSON-file-per-session persistence.
/// At most one chat may run per session at a time.
class SessionStore {
 public:
  explicit SessionStore(std::optional<std::filesystem::path> persist_dir = std::nullopt);

  class Lease {
   public:
    Lease(Lease&&) noexcept = default;
    Lease& operator=(Lease&&) noexcept = default;
    ~Lease();
    ChatSession& session() noexcept;
    /// Writes the session file when persistence is on.
    void save() const;
    /// Commits and frees the session now instead of at destruction.
    void release();

   private:
    friend class SessionStore;
    struct Slot;
    Lease(const SessionStore* store, std::shared_ptr<Slot> slot) : store_(store), slot_(std::move(slot)) {}
    const SessionStore* store_;
    std::shared_ptr<Slot> slot_;
  };

  /// Opens (creating when unknown or absent) a session for exclusive use.
  /// Throws SessionBusy when another chat holds it.
  Lease acquire(const std::optional<std::string>& session_id);

  std::optional<ChatSession> snapshot(std::string_view session_id) const;
  std::size_t size() const;

  static std::string new_session_id();

 private:
  void persist(const ChatSession& session) const;

  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Lease::Slot>, std::less<>> slots_;
};

std::string session_to_json(const ChatSession& session);
ChatSession session_from_json(std::string_view json_text);

struct ChatDeps {
  const VectorIndex& index;
  const GraphStore& store;
  const Vocabulary& vocab;
  const Embedder& embedder;
  ChatCompletionClient& llm;
};

struct ChatOptions {
  std::string model = "deepseek-r1:7b";
  double temperature = 0.0;
  int max_tokens = 2048;
  RetrievalConfig retrieval;
  HistoryLimits history;
};

struct ChatOutcome {
  bool ok = false;
  std::string text;  // linkified; equals the concatenation of streamed chunks
  std::vector<EvidenceRow> evidence;
  std::chrono::milliseconds elapsed{0};
  std::string error;
  RagPrompt prompt;
};

/// Retrieval, prompt assembly and a streamed completion. `on_chunk` receives
/// linkified text. On success the session gains (user, assistant) turns; on
/// a transport failure only the user turn is recorded.
ChatOutcome chat(ChatSession& session, std::string_view question, const ChatDeps& deps, const ChatOptions& options,
                 const std::function<void(std::string_view)>& on_chunk = {});

std::string iso8601_now();

}  // namespace kgrag
