#include "kgrag/pipeline.h"

#include <charconv>
#include <cstdlib>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "kgrag/text_util.h"

namespace kgrag {
namespace {

using nlohmann::json;

std::string read_input(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw InputError("input file not found: " + path.string());
  return text::read_file(path);
}

template <typename T>
T parse_number(std::string_view name, std::string_view value) {
  T out{};
  auto v = text::trim(value);
  auto [ptr, err] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (err != std::errc() || ptr != v.data() + v.size()) {
    throw UsageError(std::string(name) + " must be a number, got '" + std::string(value) + "'");
  }
  return out;
}

bool parse_flag(std::string_view value) {
  auto v = text::to_lower(text::trim(value));
  return v == "1" || v == "true" || v == "yes" || v == "on";
}

std::size_t positive(std::string_view name, long long v) {
  if (v <= 0) throw UsageError(std::string(name) + " must be positive");
  return static_cast<std::size_t>(v);
}

}  // namespace

void apply_config_json(PipelineConfig& cfg, std::string_view json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InputError("config file is not a JSON object");
  try {
    auto str = [&](const char* key, std::string& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::string>();
    };
    if (j.contains("ontology")) cfg.ontology = j.at("ontology").get<std::string>();
    str("endpoint_url", cfg.endpoint_url);
    str("model_name", cfg.model_name);
    str("api_key", cfg.api_key);
    if (j.contains("prompt_mode")) {
      auto mode = parse_prompt_mode(j.at("prompt_mode").get<std::string>());
      if (!mode) throw InputError("config: unknown prompt_mode");
      cfg.prompt_mode = *mode;
    }
    if (j.contains("max_retries")) cfg.max_retries = j.at("max_retries").get<int>();
    if (j.contains("workers")) cfg.workers = positive("workers", j.at("workers").get<long long>());
    str("llm_url", cfg.llm_url);
    str("llm_model", cfg.llm_model);
    str("embed_url", cfg.embed_url);
    if (j.contains("fallback_embedder")) cfg.fallback_embedder = j.at("fallback_embedder").get<bool>();
    if (j.contains("embedding_dim")) cfg.embedding_dim = positive("embedding_dim", j.at("embedding_dim").get<long long>());
    str("sparql_url", cfg.sparql_url);
    str("sparql_user", cfg.sparql_user);
    str("sparql_password", cfg.sparql_password);
    if (j.contains("k_entities")) cfg.retrieval.k_entities = positive("k_entities", j.at("k_entities").get<long long>());
    if (j.contains("k_relations")) {
      cfg.retrieval.k_relations = positive("k_relations", j.at("k_relations").get<long long>());
    }
    if (j.contains("min_score")) cfg.retrieval.min_score = j.at("min_score").get<double>();
    if (j.contains("max_context_chars")) {
      cfg.retrieval.max_context_chars = positive("max_context_chars", j.at("max_context_chars").get<long long>());
    }
    str("bind_addr", cfg.bind_addr);
    if (j.contains("session_dir")) cfg.session_dir = j.at("session_dir").get<std::string>();
    if (j.contains("mock_dir")) cfg.mock_dir = j.at("mock_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  } catch (const UsageError& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

void apply_env(PipelineConfig& cfg, const std::function<std::optional<std::string>(const char*)>& getenv) {
  auto get = [&](const char* name) -> std::optional<std::string> {
    if (getenv) return getenv(name);
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  if (auto v = get("ENDPOINT_URL")) cfg.endpoint_url = *v;
  if (auto v = get("MODEL_NAME")) cfg.model_name = *v;
  if (auto v = get("MAX_RETRIES")) cfg.max_retries = parse_number<int>("MAX_RETRIES", *v);
  if (auto v = get("WORKERS")) cfg.workers = positive("WORKERS", parse_number<long long>("WORKERS", *v));
  if (auto v = get("LLM_URL")) cfg.llm_url = *v;
  if (auto v = get("LLM_MODEL")) cfg.llm_model = *v;
  if (auto v = get("LLM_API_KEY")) cfg.api_key = *v;
  if (auto v = get("EMBED_URL")) cfg.embed_url = *v;
  if (auto v = get("FALLBACK_EMBEDDER")) cfg.fallback_embedder = parse_flag(*v);
  if (auto v = get("BIND_ADDR")) cfg.bind_addr = *v;
  if (auto v = get("K_ENTITIES")) {
    cfg.retrieval.k_entities = positive("K_ENTITIES", parse_number<long long>("K_ENTITIES", *v));
  }
  if (auto v = get("K_RELATIONS")) {
    cfg.retrieval.k_relations = positive("K_RELATIONS", parse_number<long long>("K_RELATIONS", *v));
  }
  if (auto v = get("SPARQL_URL")) cfg.sparql_url = *v;
}

std::pair<std::string, int> parse_bind_addr(std::string_view addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw UsageError("bind address must be host:port");
  int port = parse_number<int>("port", addr.substr(colon + 1));
  if (port < 0 || port > 65535) throw UsageError("port out of range");
  return {std::string(addr.substr(0, colon)), port};
}

OntologySpec load_ontology(const PipelineConfig& cfg) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(cfg.ontology, ec)) {
    throw InputError("ontology spec not found: " + cfg.ontology.string());
  }
  return OntologySpec::load(cfg.ontology);
}

std::shared_ptr<const Embedder> make_embedder(const PipelineConfig& cfg) {
  if (cfg.mock || cfg.fallback_embedder) return std::make_shared<HashingEmbedder>(cfg.embedding_dim);
  if (!cfg.embed_url.empty()) {
    return std::make_shared<HttpEmbedder>(HttpEmbedder::Options{cfg.embed_url, cfg.embedding_dim});
  }
  throw UsageError("no embedder configured: set EMBED_URL or FALLBACK_EMBEDDER=1");
}

namespace {

std::shared_ptr<ChatCompletionClient> scripted(const PipelineConfig& cfg, const char* file) {
  auto path = cfg.mock_dir / file;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw InputError("mock script not found: " + path.string());
  try {
    return std::make_shared<ScriptedChatClient>(ScriptedChatClient::load_script(path));
  } catch (const json::exception& e) {
    throw InputError("malformed mock script " + path.string() + ": " + e.what());
  }
}

}  // namespace

std::shared_ptr<ChatCompletionClient> make_extraction_client(const PipelineConfig& cfg) {
  if (cfg.mock) return scripted(cfg, "extraction.json");
  return std::make_shared<OpenAiChatClient>(OpenAiChatClient::Options{cfg.endpoint_url, cfg.api_key});
}

std::shared_ptr<ChatCompletionClient> make_chat_client(const PipelineConfig& cfg) {
  if (cfg.mock) return scripted(cfg, "chat.json");
  return std::make_shared<OpenAiChatClient>(OpenAiChatClient::Options{cfg.llm_url, cfg.api_key});
}

ExtractionOptions extraction_options(const PipelineConfig& cfg) {
  if (cfg.max_retries < 1) throw UsageError("max_retries must be at least 1");
  ExtractionOptions o;
  o.mode = cfg.prompt_mode;
  o.model = cfg.model_name;
  o.retry.max_retries = cfg.max_retries;
  o.workers = cfg.workers;
  return o;
}

ChatOptions chat_options(const PipelineConfig& cfg) {
  ChatOptions o;
  o.model = cfg.llm_model;
  o.retrieval = cfg.retrieval;
  try {
    o.retrieval.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return o;
}

ExtractionReport run_extract(const PipelineConfig& cfg, const std::filesystem::path& corpus,
                             const std::filesystem::path& out, ChatCompletionClient& client) {
  auto spec = load_ontology(cfg);
  auto records = parse_corpus_jsonl(read_input(corpus));
  auto report = extract_corpus(records, client, spec, extraction_options(cfg));
  text::write_file(out, report_to_json(report));
  spdlog::info("extracted {} relations from {} abstracts ({} failed)", report.relation_count, report.abstract_count,
               report.failed_abstract_count());
  if (!records.empty() && report.failed_abstract_count() == records.size()) {
    throw TransportError(0, "every abstract failed: " + report.abstracts.front().error);
  }
  return report;
}

RefinementResult run_refine(const PipelineConfig& cfg, const std::filesystem::path& in,
                            const std::filesystem::path& out) {
  auto spec = load_ontology(cfg);
  auto text = read_input(in);
  ExtractionReport report;
  if (!text::trim(text).empty()) {
    try {
      report = report_from_json(text, spec);
    } catch (const json::exception& e) {
      throw InputError("malformed extraction report " + in.string() + ": " + e.what());
    }
  }
  auto result = refine(report, spec);
  text::write_file(out, refined_to_jsonl(result.relations));
  return result;
}

LoadResult run_load(const PipelineConfig& cfg, const std::filesystem::path& in, const std::filesystem::path& export_path,
                    const std::optional<std::filesystem::path>& sparql_out) {
  auto spec = load_ontology(cfg);
  Vocabulary vocab(spec);
  std::vector<RefinedRelation> relations;
  try {
    relations = refined_from_jsonl(read_input(in), spec);
  } catch (const json::exception& e) {
    throw InputError("malformed refined relations " + in.string() + ": " + e.what());
  }
  LoadResult result{build_graph(relations, vocab), {}, std::nullopt};
  result.store.seal();
  text::write_file(export_path, serialize_ntriples(result.store));
  std::vector<rdf::Triple> triples(result.store.triples().begin(), result.store.triples().end());
  result.sparql = to_sparql_insert(triples);
  if (sparql_out) text::write_file(*sparql_out, result.sparql);
  if (!cfg.sparql_url.empty()) {
    result.ack = push_to_endpoint(result.sparql, {cfg.sparql_url, cfg.sparql_user, cfg.sparql_password});
    spdlog::info("endpoint accepted update with HTTP {}", result.ack->status);
  }
  return result;
}

VectorIndex run_index(const PipelineConfig& cfg, const std::filesystem::path& graph,
                      const std::filesystem::path& snapshot) {
  auto spec = load_ontology(cfg);
  Vocabulary vocab(spec);
  auto store = load_ntriples(read_input(graph));
  store.seal();
  auto embedder = make_embedder(cfg);
  auto index = embed_and_index_graph(store, vocab, *embedder);
  index.freeze();
  text::write_file(snapshot, write_snapshot(index));
  return index;
}

ServingState load_serving_state(const std::filesystem::path& graph, const std::filesystem::path& snapshot) {
  auto store = load_ntriples(read_input(graph));
  store.seal();
  auto index = read_snapshot(read_input(snapshot));
  index.freeze();
  return {std::make_shared<const GraphStore>(std::move(store)), std::make_shared<const VectorIndex>(std::move(index))};
}

}  // namespace kgrag
