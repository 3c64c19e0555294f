// Copyright 2026 the kgrag authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: one subcommand per pipeline stage plus `serve`.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "kgrag/chat_server.h"
#include "kgrag/graph_store.h"
#include "kgrag/knowledge_graph.h"
#include "kgrag/ontology.h"
#include "kgrag/pipeline.h"
#include "kgrag/rdf.h"
#include "kgrag/text_util.h"
#include "kgrag/vector_index.h"

namespace {

using nlohmann::json;
using namespace kgrag;

int fail(const char* kind, std::string_view message, int code) {
  std::cerr << json{{"error", kind}, {"message", std::string(message)}}.dump(-1, ' ', false,
                                                                              json::error_handler_t::replace)
            << std::endl;
  return code;
}

struct Flags {
  std::string config;
  std::optional<std::string> ontology;
  bool mock = false;
  std::optional<std::string> mock_dir;
  std::optional<int> max_retries;
  std::optional<std::size_t> workers;
  std::optional<std::string> mode;
  std::optional<std::string> model;
  std::optional<std::string> endpoint_url;
  std::optional<std::string> llm_url;
  std::optional<std::string> llm_model;
  std::optional<std::string> embed_url;
  bool fallback_embedder = false;
  std::optional<std::size_t> k_entities;
  std::optional<std::size_t> k_relations;
  std::optional<std::string> sparql_url;
  std::optional<std::string> bind;
  std::optional<std::string> session_dir;
};

PipelineConfig resolve_config(const Flags& f) {
  PipelineConfig cfg;
  std::string config_path = f.config;
  if (config_path.empty()) {
    if (const char* env = std::getenv("CONFIG"); env && *env) config_path = env;
  }
  if (!config_path.empty()) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(config_path, ec)) throw InputError("config file not found: " + config_path);
    apply_config_json(cfg, text::read_file(config_path));
  }
  apply_env(cfg);
  if (f.ontology) cfg.ontology = *f.ontology;
  cfg.mock = f.mock;
  if (f.mock_dir) cfg.mock_dir = *f.mock_dir;
  if (f.max_retries) cfg.max_retries = *f.max_retries;
  if (f.workers) cfg.workers = *f.workers;
  if (f.mode) {
    auto m = parse_prompt_mode(*f.mode);
    if (!m) throw UsageError("--mode must be zero, single or few");
    cfg.prompt_mode = *m;
  }
  if (f.model) cfg.model_name = *f.model;
  if (f.endpoint_url) cfg.endpoint_url = *f.endpoint_url;
  if (f.llm_url) cfg.llm_url = *f.llm_url;
  if (f.llm_model) cfg.llm_model = *f.llm_model;
  if (f.embed_url) cfg.embed_url = *f.embed_url;
  if (f.fallback_embedder) cfg.fallback_embedder = true;
  if (f.k_entities) cfg.retrieval.k_entities = *f.k_entities;
  if (f.k_relations) cfg.retrieval.k_relations = *f.k_relations;
  if (f.sparql_url) cfg.sparql_url = *f.sparql_url;
  if (f.bind) cfg.bind_addr = *f.bind;
  if (f.session_dir) cfg.session_dir = *f.session_dir;
  return cfg;
}

void print_json(const json& j) { std::cout << j.dump(2, ' ', false, json::error_handler_t::replace) << std::endl; }

int serve(const PipelineConfig& cfg, const std::string& graph, const std::string& snapshot,
          const std::optional<std::string>& capture, bool enable_ingest) {
  auto spec = load_ontology(cfg);
  auto state = load_serving_state(graph, snapshot);
  auto embedder = make_embedder(cfg);
  auto llm = make_chat_client(cfg);
  if (capture) {
    auto* scripted = dynamic_cast<ScriptedChatClient*>(llm.get());
    if (!scripted) throw UsageError("--capture requires --mock");
    scripted->set_capture_file(*capture);
  }
  auto [host, port] = parse_bind_addr(cfg.bind_addr);

  ServiceConfig service_cfg;
  service_cfg.chat = chat_options(cfg);
  service_cfg.extraction = extraction_options(cfg);
  service_cfg.enable_ingest = enable_ingest;
  service_cfg.session_dir = cfg.session_dir;
  ChatService service(std::move(spec), std::move(state), std::move(embedder), std::move(llm), service_cfg);
  ChatServer server(service);

  // Signals are blocked here and in every thread spawned later; a dedicated
  // thread waits for them and stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  int bound = server.bind(host, port);
  if (bound < 0) throw TransportError(0, "cannot bind " + cfg.bind_addr);
  std::jthread waiter([&server, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  server.run();
  // Wake the waiter if the server stopped on its own.
  pthread_kill(waiter.native_handle(), SIGTERM);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("kgrag"));
  if (const char* level = std::getenv("LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(level));

  CLI::App app{"Knowledge-graph question answering pipeline"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "JSON config file (default: $CONFIG)");
  app.add_option("--ontology", f.ontology, "ontology spec file");

  auto* extract = app.add_subcommand("extract", "extract relations from a JSONL corpus");
  std::string corpus, report_out;
  extract->add_option("--corpus", corpus)->required();
  extract->add_option("--out", report_out)->required();
  extract->add_option("--mode", f.mode, "zero, single or few");
  extract->add_option("--model", f.model);
  extract->add_option("--endpoint-url", f.endpoint_url, "chat-completions base URL");
  extract->add_option("--max-retries", f.max_retries);
  extract->add_option("--workers", f.workers)->check(CLI::PositiveNumber);

  auto* refine_cmd = app.add_subcommand("refine", "normalize and deduplicate extracted relations");
  std::string refine_in, refine_out;
  std::optional<std::string> stats_out;
  refine_cmd->add_option("--in", refine_in)->required();
  refine_cmd->add_option("--out", refine_out)->required();
  refine_cmd->add_option("--stats", stats_out, "also write the stats JSON here");

  auto* load = app.add_subcommand("load", "build the RDF graph and export it");
  std::string load_in, export_path;
  std::optional<std::string> sparql_out;
  load->add_option("--in", load_in)->required();
  load->add_option("--export", export_path)->required();
  load->add_option("--endpoint", f.sparql_url, "SPARQL update endpoint");
  load->add_option("--sparql-out", sparql_out, "write the INSERT DATA update here");

  auto* index = app.add_subcommand("index", "embed graph nodes and write an index snapshot");
  std::string graph, snapshot;
  index->add_option("--graph", graph)->required();
  index->add_option("--snapshot", snapshot)->required();
  index->add_flag("--fallback-embedder", f.fallback_embedder);
  index->add_option("--embed-url", f.embed_url);

  auto* ask = app.add_subcommand("ask", "answer one question");
  std::string question;
  bool ask_json = false;
  ask->add_option("--question", question)->required();
  ask->add_option("--graph", graph)->required();
  ask->add_option("--snapshot", snapshot)->required();
  ask->add_flag("--json", ask_json, "print text and evidence as JSON");

  auto* serve_cmd = app.add_subcommand("serve", "start the HTTP chat service");
  std::optional<std::string> capture;
  bool enable_ingest = false;
  serve_cmd->add_option("--graph", graph)->required();
  serve_cmd->add_option("--snapshot", snapshot)->required();
  serve_cmd->add_option("--bind", f.bind, "host:port (port 0 picks a free one)");
  serve_cmd->add_option("--capture", capture, "with --mock, append every LLM request to this JSONL file");
  serve_cmd->add_option("--session-dir", f.session_dir, "persist sessions as JSON files here");
  serve_cmd->add_flag("--enable-ingest", enable_ingest, "accept POST /api/ingest");

  for (auto* cmd : {ask, serve_cmd}) {
    cmd->add_option("--llm-url", f.llm_url);
    cmd->add_option("--llm-model", f.llm_model);
    cmd->add_option("--embed-url", f.embed_url);
    cmd->add_flag("--fallback-embedder", f.fallback_embedder);
    cmd->add_option("--k-entities", f.k_entities)->check(CLI::PositiveNumber);
    cmd->add_option("--k-relations", f.k_relations)->check(CLI::PositiveNumber);
  }
  for (auto* cmd : {extract, ask, serve_cmd}) {
    cmd->add_flag("--mock", f.mock, "use scripted offline backends");
    cmd->add_option("--mock-dir", f.mock_dir, "directory holding extraction.json and chat.json");
  }

  auto* prompt = app.add_subcommand("prompt", "print the extraction prompt");
  prompt->add_option("--mode", f.mode, "zero, single or few");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitUsage);
  }

  try {
    auto cfg = resolve_config(f);
    if (*prompt) {
      std::cout << build_extraction_prompt(load_ontology(cfg), cfg.prompt_mode);
      std::cout.flush();
    } else if (*extract) {
      auto client = make_extraction_client(cfg);
      auto report = run_extract(cfg, corpus, report_out, *client);
      print_json({{"abstracts", report.abstract_count},
                  {"failed_abstracts", report.failed_abstract_count()},
                  {"relations", report.relation_count},
                  {"parse_failures", report.parse_failures.size()},
                  {"rejections", report.rejections.size()}});
    } else if (*refine_cmd) {
      auto result = run_refine(cfg, refine_in, refine_out);
      auto stats = stats_to_json(result.stats);
      if (stats_out) text::write_file(*stats_out, stats);
      std::cout << stats;
      if (!stats.empty() && stats.back() != '\n') std::cout << '\n';
    } else if (*load) {
      auto result = run_load(cfg, load_in, export_path, sparql_out);
      Vocabulary vocab(load_ontology(cfg));
      auto counts = count_nodes(result.store, vocab);
      json out = {{"triples", result.store.size()},
                  {"entities", counts.entities},
                  {"relations", counts.relations},
                  {"publications", counts.publications}};
      if (result.ack) out["endpoint_status"] = result.ack->status;
      print_json(out);
    } else if (*index) {
      auto idx = run_index(cfg, graph, snapshot);
      print_json({{"documents", idx.size()},
                  {"entities", idx.count(DocClass::kEntity)},
                  {"relations", idx.count(DocClass::kRelation)},
                  {"publications", idx.count(DocClass::kPublication)},
                  {"dim", idx.dim()}});
    } else if (*ask) {
      auto spec = load_ontology(cfg);
      auto state = load_serving_state(graph, snapshot);
      auto embedder = make_embedder(cfg);
      if (embedder->dim() != state.index->dim()) throw DimensionMismatch(state.index->dim(), embedder->dim());
      auto llm = make_chat_client(cfg);
      Vocabulary vocab(spec);
      ChatSession session;
      ChatDeps deps{*state.index, *state.store, vocab, *embedder, *llm};
      auto outcome = chat(session, question, deps, chat_options(cfg));
      if (!outcome.ok) throw TransportError(0, outcome.error);
      if (ask_json) {
        json ev = json::array();
        for (const auto& e : outcome.evidence) {
          ev.push_back({{"relation", e.relation_iri},
                        {"predicate", e.predicate},
                        {"subject", e.subject},
                        {"object", e.object},
                        {"publication_id", e.publication_id}});
        }
        print_json({{"text", outcome.text}, {"evidence", ev}});
      } else {
        std::cout << outcome.text << std::endl;
      }
    } else if (*serve_cmd) {
      return serve(cfg, graph, snapshot, capture, enable_ingest);
    }
  } catch (const UsageError& e) {
    return fail("usage", e.what(), kExitUsage);
  } catch (const TransportError& e) {
    return fail("transport", e.what(), kExitTransport);
  } catch (const std::exception& e) {
    // Malformed files, bad snapshots, ontology errors and the like.
    return fail("input", e.what(), kExitInput);
  }
  return kExitOk;
}
