#include "kgrag/chat_server.h"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <nlohmann/json.hpp>

#include "kgrag/refinement.h"
#include "kgrag/sse.h"

namespace kgrag {
namespace {

using nlohmann::json;

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(dump(body), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

json evidence_json(const std::vector<EvidenceRow>& evidence) {
  json rows = json::array();
  for (const auto& e : evidence) {
    rows.push_back({{"relation", e.relation_iri},
                    {"predicate", e.predicate},
                    {"subject", e.subject},
                    {"object", e.object},
                    {"publication_id", e.publication_id}});
  }
  return rows;
}

}  // namespace

ChatService::ChatService(OntologySpec spec, ServingState state, std::shared_ptr<const Embedder> embedder,
                         std::shared_ptr<ChatCompletionClient> llm, ServiceConfig config)
    : spec_(std::move(spec)),
      vocab_(spec_),
      embedder_(std::move(embedder)),
      llm_(std::move(llm)),
      config_(std::move(config)),
      sessions_(config_.session_dir),
      state_(std::move(state)) {
  config_.chat.retrieval.validate();
  if (!state_.store || !state_.index) throw std::invalid_argument("serving state is incomplete");
  if (state_.index->dim() != embedder_->dim()) throw DimensionMismatch(state_.index->dim(), embedder_->dim());
}

ServingState ChatService::state() const {
  std::lock_guard lock(state_mu_);
  return state_;
}

void ChatService::replace_state(ServingState state) {
  std::lock_guard lock(state_mu_);
  state_ = std::move(state);
}

ChatOutcome ChatService::chat(ChatSession& session, std::string_view question,
                              const std::function<void(std::string_view)>& on_chunk) {
  auto st = state();
  ChatDeps deps{*st.index, *st.store, vocab_, *embedder_, *llm_};
  return kgrag::chat(session, question, deps, config_.chat, on_chunk);
}

IngestSummary ChatService::ingest(std::string_view corpus_jsonl) {
  std::lock_guard ingest_lock(ingest_mu_);
  auto corpus = parse_corpus_jsonl(corpus_jsonl);
  auto report = extract_corpus(corpus, *llm_, spec_, config_.extraction);
  auto refined = refine(report, spec_);

  auto current = state();
  GraphStore merged;
  for (const auto& t : current.store->triples()) merged.insert(t);
  for (const auto& r : refined.relations) {
    auto triples = relation_to_triples(r, vocab_);
    merged.insert_all(triples);
  }
  merged.seal();
  auto index = embed_and_index_graph(merged, vocab_, *embedder_);
  index.freeze();

  IngestSummary summary{corpus.size(), report.failed_abstract_count(), refined.relations.size(), merged.size(),
                        index.size()};
  replace_state({std::make_shared<const GraphStore>(std::move(merged)),
                 std::make_shared<const VectorIndex>(std::move(index))});
  spdlog::info("ingested {} abstracts, {} relations; graph now {} triples", summary.abstracts, summary.relations,
               summary.triple_count);
  return summary;
}

struct ChatServer::Impl {
  ChatService& service;
  httplib::Server server;

  explicit Impl(ChatService& s) : service(s) { routes(); }

  void routes() {
    server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
      auto st = service.state();
      send_json(res, 200, {{"status", "ok"}, {"index_size", st.index->size()}, {"triple_count", st.store->size()}});
    });

    server.Get(R"(/api/session/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto snap = service.sessions().snapshot(req.matches[1].str());
      if (!snap) return send_error(res, 404, "unknown session");
      res.status = 200;
      res.set_content(session_to_json(*snap), "application/json; charset=utf-8");
    });

    server.Post("/api/chat", [this](const httplib::Request& req, httplib::Response& res) { handle_chat(req, res); });

    server.Post("/api/ingest", [this](const httplib::Request& req, httplib::Response& res) {
      if (!service.config().enable_ingest) return send_error(res, 404, "ingest is disabled");
      try {
        auto s = service.ingest(req.body);
        send_json(res, 200,
                  {{"abstracts", s.abstracts},
                   {"failed_abstracts", s.failed_abstracts},
                   {"relations", s.relations},
                   {"triple_count", s.triple_count},
                   {"index_size", s.index_size}});
      } catch (const CorpusFormatError& e) {
        send_error(res, 400, e.what());
      }
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string message = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        message = e.what();
      } catch (...) {
      }
      spdlog::error("request failed: {}", message);
      send_error(res, 500, message);
    });
  }

  void handle_chat(const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "request body must be a JSON object");
    auto q = body.find("question");
    if (q == body.end() || !q->is_string() || q->get_ref<const std::string&>().find_first_not_of(" \t\r\n") ==
                                                  std::string::npos) {
      return send_error(res, 400, "field 'question' must be a non-empty string");
    }
    std::optional<std::string> session_id;
    if (auto s = body.find("session_id"); s != body.end() && !s->is_null()) {
      if (!s->is_string()) return send_error(res, 400, "field 'session_id' must be a string");
      session_id = s->get<std::string>();
    }

    std::shared_ptr<SessionStore::Lease> lease;
    try {
      lease = std::make_shared<SessionStore::Lease>(service.sessions().acquire(session_id));
    } catch (const SessionBusy& e) {
      return send_error(res, 409, e.what());
    } catch (const std::invalid_argument& e) {
      return send_error(res, 400, e.what());
    }

    const std::string sid = lease->session().session_id;
    res.set_header("X-Session-Id", sid);
    res.set_header("Cache-Control", "no-cache");
    auto question = std::make_shared<std::string>(q->get<std::string>());
    res.set_chunked_content_provider(
        "text/event-stream", [this, lease, question, sid](std::size_t, httplib::DataSink& sink) {
          bool open = true;
          auto send = [&](std::string_view event, const json& data) {
            if (!open) return;
            auto frame = format_sse_event(event, dump(data));
            open = sink.write(frame.data(), frame.size());
          };
          auto outcome =
              service.chat(lease->session(), *question, [&](std::string_view piece) {
                send("chunk", {{"text", std::string(piece)}});
              });
          lease->save();
          // Free the session before the final event so a client may send its next turn right away.
          lease->release();
          if (outcome.ok) {
            send("done", {{"session_id", sid},
                          {"text", outcome.text},
                          {"evidence", evidence_json(outcome.evidence)},
                          {"elapsed_ms", outcome.elapsed.count()}});
          } else {
            spdlog::warn("chat in session {} failed: {}", sid, outcome.error);
            send("error", {{"session_id", sid}, {"message", outcome.error}});
          }
          sink.done();
          return true;
        });
  }
};

ChatServer::ChatServer(ChatService& service) : impl_(std::make_unique<Impl>(service)) {}

ChatServer::~ChatServer() { stop(); }

int ChatServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool ChatServer::run() { return impl_->server.listen_after_bind(); }

void ChatServer::stop() {
  if (impl_) impl_->server.stop();
}

void ChatServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace kgrag
