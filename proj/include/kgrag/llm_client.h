#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1024;
};

/// Network or HTTP failure. `status` is the HTTP status, or 0 when no response
/// was received.
class TransportError : public std::runtime_error {
 public:
  TransportError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

using DeltaCallback = std::function<void(std::string_view)>;

class ChatCompletionClient {
 public:
  virtual ~ChatCompletionClient() = default;

  virtual std::string complete(const CompletionRequest& request) = 0;

  /// Invokes `on_delta` for each content fragment in arrival order. Throws
  /// TransportError, possibly after some deltas were delivered.
  virtual void stream(const CompletionRequest& request, const DeltaCallback& on_delta) = 0;
};

/// OpenAI-style chat-completion endpoint, e.g. a hosted API or a local Ollama
/// server at http://localhost:11434/v1.
class OpenAiChatClient final : public ChatCompletionClient {
 public:
  struct Options {
    std::string base_url;
    std::string api_key;
    std::chrono::seconds timeout{300};
  };

  explicit OpenAiChatClient(Options options);

  std::string complete(const CompletionRequest& request) override;
  void stream(const CompletionRequest& request, const DeltaCallback& on_delta) override;

 private:
  Options options_;
};

/// Deterministic offline client driven by a script:
///
///   {"rules": [{"match": "...", "response": "..."}],
///    "fallback": "... {sources} ...", "chunk_size": 7}
///
/// The first rule whose `match` occurs in the last user message wins. The
/// fallback may reference `{sources}` (publication ids cited as "(source: X)"
/// in the system message) and `{question}`. Streams split the response into
/// `chunk_size`-byte pieces without breaking UTF-8 sequences.
class ScriptedChatClient final : public ChatCompletionClient {
 public:
  struct Rule {
    std::string match;
    std::string response;
  };
  struct Script {
    std::vector<Rule> rules;
    std::string fallback;
    std::size_t chunk_size = 7;
  };

  explicit ScriptedChatClient(Script script);
  static Script load_script(const std::filesystem::path& path);

  std::string complete(const CompletionRequest& request) override;
  void stream(const CompletionRequest& request, const DeltaCallback& on_delta) override;

  /// Appends every request as one JSON line to `path`.
  void set_capture_file(std::filesystem::path path);
  std::vector<CompletionRequest> captured() const;

  std::string response_for(const CompletionRequest& request) const;

 private:
  void record(const CompletionRequest& request);

  Script script_;
  mutable std::mutex mu_;
  std::vector<CompletionRequest> captured_;
  std::optional<std::filesystem::path> capture_file_;
};

/// Splits `text` into pieces of at most `chunk_size` bytes (at least one code
/// point each), never inside a UTF-8 sequence.
std::vector<std::string> split_utf8_chunks(std::string_view text, std::size_t chunk_size);

}  // namespace kgrag
