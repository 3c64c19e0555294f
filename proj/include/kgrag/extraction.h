#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgrag/llm_client.h"
#include "kgrag/ontology.h"

namespace kgrag {

struct AbstractRecord {
  std::string publication_id;
  std::string text;
  std::optional<std::string> source_url;
};

/// One relation as the model emitted it; labels are not yet checked.
struct RawRelation {
  std::string relation_type;
  std::string entity1_type;
  std::string entity1_name;
  std::string entity2_type;
  std::string entity2_name;
  std::string publication_id;

  bool operator==(const RawRelation&) const = default;
};

struct ParseFailure {
  std::string publication_id;
  std::string line;
  std::string reason;
};

struct ParseResult {
  std::vector<RawRelation> relations;
  std::vector<ParseFailure> failures;
};

/// Line-oriented parser for the brace format requested by the extraction
/// prompt. Each line may carry several `{...}` groups; keys and values may be
/// single- or double-quoted. Lines without a well-formed group become
/// failures. Never throws.
ParseResult parse_relation_output(std::string_view completion_text, std::string_view publication_id) noexcept;

/// Canonical single-quoted rendering; backslash, quotes and line breaks in
/// values are backslash-escaped so the result is always one line.
std::string serialize_relation(const RawRelation& relation);

struct ValidatedRelation {
  RelationType relation_type;
  EntityType entity1_type;
  std::string entity1_name;
  EntityType entity2_type;
  std::string entity2_name;
  std::string publication_id;

  bool operator==(const ValidatedRelation&) const = default;
};

enum class RejectedField { kRelationType, kEntity1Type, kEntity2Type };
std::string_view to_string(RejectedField field);

struct Rejection {
  RawRelation relation;
  RejectedField field;
};

std::variant<ValidatedRelation, Rejection> validate_relation(const RawRelation& relation, const OntologySpec& spec);

RawRelation to_raw(const ValidatedRelation& relation);

struct RetryPolicy {
  /// Total number of attempts per abstract, including the first.
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  /// Defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct ExtractionOptions {
  PromptMode mode = kDefaultPromptMode;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1024;
  RetryPolicy retry;
  std::size_t workers = 4;
};

struct AbstractStatus {
  std::string publication_id;
  int attempts = 0;
  bool ok = false;
  std::string error;
};

struct ExtractionReport {
  std::vector<ValidatedRelation> relations;
  std::vector<ParseFailure> parse_failures;
  std::vector<Rejection> rejections;
  std::vector<AbstractStatus> abstracts;
  std::size_t abstract_count = 0;
  std::size_t relation_count = 0;

  std::size_t failed_abstract_count() const;
  void append(ExtractionReport&& other);
};

/// The user turn sent alongside the extraction prompt for one abstract.
std::string extraction_user_message(const AbstractRecord& abstract);

ExtractionReport extract_from_abstract(const AbstractRecord& abstract, ChatCompletionClient& client,
                                       const OntologySpec& spec, const ExtractionOptions& options);

/// Runs extract_from_abstract over the corpus with a bounded worker pool. The
/// merged report lists relations in corpus order regardless of scheduling.
ExtractionReport extract_corpus(std::span<const AbstractRecord> corpus, ChatCompletionClient& client,
                                const OntologySpec& spec, const ExtractionOptions& options);

class CorpusFormatError : public std::runtime_error {
 public:
  CorpusFormatError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// One JSON object per line: {"publication_id", "text", "source_url"?}.
std::vector<AbstractRecord> parse_corpus_jsonl(std::string_view text);

std::string report_to_json(const ExtractionReport& report);
/// Relations are re-validated against `spec`; unknown labels are an error.
ExtractionReport report_from_json(std::string_view json_text, const OntologySpec& spec);

}  // namespace kgrag
