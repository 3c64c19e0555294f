#include "kgrag/extraction.h"

#include <algorithm>
#include <array>
#include <atomic>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "kgrag/text_util.h"

namespace kgrag {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 5> kKeys = {"relation_type", "entity1_type", "entity1_name", "entity2_type",
                                                   "entity2_name"};

std::string* field_for(RawRelation& r, std::string_view key) {
  if (key == "relation_type") return &r.relation_type;
  if (key == "entity1_type") return &r.entity1_type;
  if (key == "entity1_name") return &r.entity1_name;
  if (key == "entity2_type") return &r.entity2_type;
  if (key == "entity2_name") return &r.entity2_name;
  return nullptr;
}

// Recursive-descent reader for one `{...}` group.
class ObjectReader {
 public:
  explicit ObjectReader(std::string_view group) : s_(group) {}

  // Returns an empty string on success, otherwise the failure reason.
  std::string read(RawRelation& out) {
    std::array<bool, kKeys.size()> seen{};
    skip_ws();
    if (!eat('{')) return "expected '{'";
    skip_ws();
    if (eat('}')) return "empty object";
    for (;;) {
      skip_ws();
      std::string key;
      if (!quoted(key)) return "expected quoted key";
      skip_ws();
      if (!eat(':')) return "expected ':' after key '" + key + "'";
      skip_ws();
      std::string value;
      if (!quoted(value)) return "value for '" + key + "' is not a quoted string";
      std::string* slot = field_for(out, key);
      if (slot == nullptr) return "unexpected key '" + key + "'";
      std::size_t idx = static_cast<std::size_t>(std::find(kKeys.begin(), kKeys.end(), key) - kKeys.begin());
      if (seen[idx]) return "duplicate key '" + key + "'";
      seen[idx] = true;
      if (text::trim(value).empty()) return "empty value for '" + key + "'";
      *slot = std::move(value);
      skip_ws();
      if (eat(',')) {
        skip_ws();
        if (eat('}')) break;  // tolerate a trailing comma
        continue;
      }
      if (eat('}')) break;
      return "expected ',' or '}'";
    }
    skip_ws();
    if (pos_ != s_.size()) return "trailing characters after '}'";
    for (std::size_t i = 0; i < kKeys.size(); ++i) {
      if (!seen[i]) return "missing key '" + std::string(kKeys[i]) + "'";
    }
    return {};
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && text::is_space(s_[pos_])) ++pos_;
  }
  bool eat(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool quoted(std::string& out) {
    if (pos_ >= s_.size() || (s_[pos_] != '\'' && s_[pos_] != '"')) return false;
    char q = s_[pos_++];
    while (pos_ < s_.size() && s_[pos_] != q) {
      char c = s_[pos_++];
      if (c == '\\' && pos_ < s_.size()) {
        char e = s_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 'r': out.push_back('\r'); break;
          case 't': out.push_back('\t'); break;
          case '\\': case '\'': case '"': out.push_back(e); break;
          default:
            out.push_back('\\');
            out.push_back(e);
        }
        continue;
      }
      out.push_back(c);
    }
    return eat(q);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

// Splits a line into top-level brace groups. Quotes are only tracked inside a
// group; prose outside may contain apostrophes freely.
bool brace_groups(std::string_view line, std::vector<std::string_view>& groups) {
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] != '{') {
      ++i;
      continue;
    }
    std::size_t start = i;
    int depth = 0;
    char quote = 0;
    bool closed = false;
    for (; i < line.size(); ++i) {
      char c = line[i];
      if (quote) {
        if (c == '\\') {
          ++i;
        } else if (c == quote) {
          quote = 0;
        }
        continue;
      }
      if (c == '\'' || c == '"') {
        quote = c;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        closed = true;
        ++i;
        break;
      }
    }
    if (!closed) return false;
    groups.push_back(line.substr(start, i - start));
  }
  return true;
}

void escape_into(std::string& out, std::string_view value) {
  for (char c : value) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
}

json raw_to_json(const RawRelation& r) {
  return {{"relation_type", r.relation_type}, {"entity1_type", r.entity1_type}, {"entity1_name", r.entity1_name},
          {"entity2_type", r.entity2_type},   {"entity2_name", r.entity2_name}, {"publication_id", r.publication_id}};
}

RawRelation raw_from_json(const json& j) {
  return {j.at("relation_type").get<std::string>(), j.at("entity1_type").get<std::string>(),
          j.at("entity1_name").get<std::string>(),  j.at("entity2_type").get<std::string>(),
          j.at("entity2_name").get<std::string>(),  j.at("publication_id").get<std::string>()};
}

void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

}  // namespace

ParseResult parse_relation_output(std::string_view completion_text, std::string_view publication_id) noexcept {
  ParseResult result;
  try {
    for (std::string_view line : text::split_lines(completion_text)) {
      if (text::trim(line).empty()) continue;
      auto fail = [&](std::string reason) {
        result.failures.push_back({std::string(publication_id), std::string(line), std::move(reason)});
      };
      std::vector<std::string_view> groups;
      if (!brace_groups(line, groups)) {
        fail("unterminated brace group");
        continue;
      }
      if (groups.empty()) {
        fail("no relation object on line");
        continue;
      }
      for (std::string_view group : groups) {
        RawRelation r;
        std::string reason = ObjectReader(group).read(r);
        if (!reason.empty()) {
          fail(std::move(reason));
          continue;
        }
        r.publication_id = std::string(publication_id);
        result.relations.push_back(std::move(r));
      }
    }
  } catch (const std::exception& e) {
    // Only allocation failure can land here.
    result.failures.push_back({std::string(publication_id), {}, std::string("parser error: ") + e.what()});
  }
  return result;
}

std::string serialize_relation(const RawRelation& r) {
  std::string out = "{";
  auto put = [&](std::string_view key, const std::string& value, bool last) {
    out += "'";
    out += key;
    out += "': '";
    escape_into(out, value);
    out += last ? "'" : "', ";
  };
  put("relation_type", r.relation_type, false);
  put("entity1_type", r.entity1_type, false);
  put("entity1_name", r.entity1_name, false);
  put("entity2_type", r.entity2_type, false);
  put("entity2_name", r.entity2_name, true);
  out += "}";
  return out;
}

std::string_view to_string(RejectedField field) {
  switch (field) {
    case RejectedField::kRelationType: return "relation_type";
    case RejectedField::kEntity1Type: return "entity1_type";
    case RejectedField::kEntity2Type: return "entity2_type";
  }
  return "relation_type";
}

std::variant<ValidatedRelation, Rejection> validate_relation(const RawRelation& r, const OntologySpec& spec) {
  auto rel = spec.relation_type(r.relation_type);
  if (!rel) return Rejection{r, RejectedField::kRelationType};
  auto t1 = spec.entity_type(r.entity1_type);
  if (!t1) return Rejection{r, RejectedField::kEntity1Type};
  auto t2 = spec.entity_type(r.entity2_type);
  if (!t2) return Rejection{r, RejectedField::kEntity2Type};
  return ValidatedRelation{*rel, *t1, r.entity1_name, *t2, r.entity2_name, r.publication_id};
}

RawRelation to_raw(const ValidatedRelation& v) {
  return {v.relation_type.label(), v.entity1_type.label(), v.entity1_name,
          v.entity2_type.label(),  v.entity2_name,         v.publication_id};
}

std::size_t ExtractionReport::failed_abstract_count() const {
  return static_cast<std::size_t>(std::count_if(abstracts.begin(), abstracts.end(), [](const auto& a) { return !a.ok; }));
}

void ExtractionReport::append(ExtractionReport&& other) {
  auto move_all = [](auto& dst, auto& src) { std::move(src.begin(), src.end(), std::back_inserter(dst)); };
  move_all(relations, other.relations);
  move_all(parse_failures, other.parse_failures);
  move_all(rejections, other.rejections);
  move_all(abstracts, other.abstracts);
  abstract_count += other.abstract_count;
  relation_count = relations.size();
}

std::string extraction_user_message(const AbstractRecord& abstract) {
  return "Text: \"" + abstract.text + "\"\nOutput:";
}

ExtractionReport extract_from_abstract(const AbstractRecord& abstract, ChatCompletionClient& client,
                                       const OntologySpec& spec, const ExtractionOptions& options) {
  ExtractionReport report;
  report.abstract_count = 1;
  AbstractStatus status{abstract.publication_id, 0, false, {}};

  CompletionRequest request;
  request.model = options.model;
  request.temperature = options.temperature;
  request.max_tokens = options.max_tokens;
  request.messages = {{"system", build_extraction_prompt(spec, options.mode)},
                      {"user", extraction_user_message(abstract)}};

  const int max_attempts = std::max(1, options.retry.max_retries);
  const auto& sleep = options.retry.sleep ? options.retry.sleep : default_sleep;
  auto backoff = options.retry.initial_backoff;
  std::optional<std::string> completion;
  while (status.attempts < max_attempts) {
    ++status.attempts;
    try {
      completion = client.complete(request);
      break;
    } catch (const TransportError& e) {
      status.error = e.what();
      spdlog::warn("extraction attempt {}/{} for {} failed: {}", status.attempts, max_attempts,
                   abstract.publication_id, e.what());
      if (status.attempts < max_attempts) {
        sleep(backoff);
        backoff = std::chrono::milliseconds(static_cast<long long>(backoff.count() * options.retry.multiplier));
      }
    } catch (const std::exception& e) {
      status.error = e.what();
      break;
    }
  }

  if (completion) {
    status.ok = true;
    status.error.clear();
    auto parsed = parse_relation_output(*completion, abstract.publication_id);
    report.parse_failures = std::move(parsed.failures);
    for (auto& raw : parsed.relations) {
      auto v = validate_relation(raw, spec);
      if (auto* ok = std::get_if<ValidatedRelation>(&v)) {
        report.relations.push_back(std::move(*ok));
      } else {
        report.rejections.push_back(std::get<Rejection>(std::move(v)));
      }
    }
  }
  report.relation_count = report.relations.size();
  report.abstracts.push_back(std::move(status));
  return report;
}

ExtractionReport extract_corpus(std::span<const AbstractRecord> corpus, ChatCompletionClient& client,
                                const OntologySpec& spec, const ExtractionOptions& options) {
  std::vector<std::optional<ExtractionReport>> per_abstract(corpus.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < corpus.size(); i = next++) {
      per_abstract[i] = extract_from_abstract(corpus[i], client, spec, options);
    }
  };
  std::size_t n_workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(corpus.size(), 1));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  ExtractionReport merged;
  for (auto& r : per_abstract) merged.append(std::move(*r));
  return merged;
}

CorpusFormatError::CorpusFormatError(std::size_t line, const std::string& message)
    : std::runtime_error("corpus line " + std::to_string(line) + ": " + message), line_(line) {}

std::vector<AbstractRecord> parse_corpus_jsonl(std::string_view content) {
  std::vector<AbstractRecord> corpus;
  std::size_t lineno = 0;
  for (std::string_view line : text::split_lines(content)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw CorpusFormatError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CorpusFormatError(lineno, "expected a JSON object");
    AbstractRecord rec;
    auto str = [&](const char* key) -> std::string {
      auto it = j.find(key);
      if (it == j.end() || !it->is_string()) throw CorpusFormatError(lineno, std::string("missing string field '") + key + "'");
      return it->get<std::string>();
    };
    rec.publication_id = str("publication_id");
    rec.text = str("text");
    if (text::trim(rec.publication_id).empty()) throw CorpusFormatError(lineno, "empty publication_id");
    if (text::trim(rec.text).empty()) throw CorpusFormatError(lineno, "empty text");
    if (auto it = j.find("source_url"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) throw CorpusFormatError(lineno, "source_url must be a string");
      rec.source_url = it->get<std::string>();
    }
    corpus.push_back(std::move(rec));
  }
  return corpus;
}

std::string report_to_json(const ExtractionReport& report) {
  json rels = json::array();
  for (const auto& r : report.relations) rels.push_back(raw_to_json(to_raw(r)));
  json failures = json::array();
  for (const auto& f : report.parse_failures) {
    failures.push_back({{"publication_id", f.publication_id}, {"line", f.line}, {"reason", f.reason}});
  }
  json rejections = json::array();
  for (const auto& r : report.rejections) {
    json j = raw_to_json(r.relation);
    j["field"] = to_string(r.field);
    rejections.push_back(std::move(j));
  }
  json abstracts = json::array();
  for (const auto& a : report.abstracts) {
    json j = {{"publication_id", a.publication_id}, {"attempts", a.attempts}, {"ok", a.ok}};
    if (!a.ok) j["error"] = a.error;
    abstracts.push_back(std::move(j));
  }
  json doc = {{"abstract_count", report.abstract_count},
              {"relation_count", report.relation_count},
              {"relations", std::move(rels)},
              {"parse_failures", std::move(failures)},
              {"rejections", std::move(rejections)},
              {"abstracts", std::move(abstracts)}};
  // Invalid UTF-8 in model output is replaced rather than aborting the dump.
  return doc.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

ExtractionReport report_from_json(std::string_view json_text, const OntologySpec& spec) {
  json doc = json::parse(json_text);
  ExtractionReport report;
  for (const auto& j : doc.at("relations")) {
    auto v = validate_relation(raw_from_json(j), spec);
    if (auto* rej = std::get_if<Rejection>(&v)) {
      throw std::invalid_argument("report relation has unknown " + std::string(to_string(rej->field)) + " '" +
                                  serialize_relation(rej->relation) + "'");
    }
    report.relations.push_back(std::get<ValidatedRelation>(std::move(v)));
  }
  for (const auto& j : doc.value("parse_failures", json::array())) {
    report.parse_failures.push_back(
        {j.at("publication_id").get<std::string>(), j.at("line").get<std::string>(), j.at("reason").get<std::string>()});
  }
  for (const auto& j : doc.value("rejections", json::array())) {
    std::string field = j.at("field").get<std::string>();
    RejectedField f = field == "entity1_type"   ? RejectedField::kEntity1Type
                      : field == "entity2_type" ? RejectedField::kEntity2Type
                                                : RejectedField::kRelationType;
    report.rejections.push_back({raw_from_json(j), f});
  }
  for (const auto& j : doc.value("abstracts", json::array())) {
    report.abstracts.push_back({j.at("publication_id").get<std::string>(), j.at("attempts").get<int>(),
                                j.at("ok").get<bool>(), j.value("error", std::string())});
  }
  report.abstract_count = doc.value("abstract_count", report.abstracts.size());
  report.relation_count = report.relations.size();
  return report;
}

}  // namespace kgrag
