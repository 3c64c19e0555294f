#include "kgrag/chat_server.h"

#include <gtest/gtest.h>

#include <condition_variable>
#include <future>
#include <thread>

#include <nlohmann/json.hpp>

#include "kgrag/text_util.h"
#include "support/fixtures.h"
#include "support/http_client.h"

namespace kgrag {
namespace {

using nlohmann::json;
using testing::http_get;
using testing::http_post;

// Holds every stream open until release() is called.
class GateClient : public ChatCompletionClient {
 public:
  std::string complete(const CompletionRequest&) override { return {}; }
  void stream(const CompletionRequest&, const DeltaCallback& on_delta) override {
    {
      std::unique_lock lock(mu_);
      entered_ = true;
      cv_.notify_all();
      cv_.wait(lock, [&] { return released_; });
    }
    on_delta("released");
  }
  void wait_entered() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return entered_; });
  }
  void release() {
    std::lock_guard lock(mu_);
    released_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  bool entered_ = false;
  bool released_ = false;
};

class ServerHarness {
 public:
  ServerHarness(std::shared_ptr<ChatCompletionClient> llm, ServiceConfig config = {}) {
    auto fx = testing::build_fixture();
    ServingState state{std::make_shared<const GraphStore>(std::move(fx.store)),
                       std::make_shared<const VectorIndex>(std::move(fx.index))};
    service_ = std::make_unique<ChatService>(testing::spec(), state, std::make_shared<HashingEmbedder>(),
                                             std::move(llm), std::move(config));
    server_ = std::make_unique<ChatServer>(*service_);
    port_ = server_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_->run(); });
    server_->wait_until_ready();
  }
  ~ServerHarness() {
    server_->stop();
    thread_.join();
  }
  int port() const { return port_; }
  ChatService& service() { return *service_; }

 private:
  std::unique_ptr<ChatService> service_;
  std::unique_ptr<ChatServer> server_;
  std::thread thread_;
  int port_ = -1;
};

std::shared_ptr<ScriptedChatClient> scripted() {
  return std::make_shared<ScriptedChatClient>(ScriptedChatClient::load_script(testing::mock_dir() / "chat.json"));
}

TEST(ChatServer, Health) {
  ServerHarness h(scripted());
  ASSERT_GT(h.port(), 0);
  auto res = http_get(h.port(), "/api/health");
  ASSERT_EQ(res.status, 200);
  auto j = json::parse(res.body);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["index_size"], 32);
  EXPECT_EQ(j["triple_count"], 100);
}

TEST(ChatServer, ChatStreamsChunksThenDone) {
  ServerHarness h(scripted());
  auto res = http_post(h.port(), "/api/chat", R"({"question": "Which registry trials exist?"})");
  ASSERT_EQ(res.status, 200);
  EXPECT_EQ(res.content_type.rfind("text/event-stream", 0), 0u);
  ASSERT_GE(res.events.size(), 2u);
  std::string joined;
  for (std::size_t i = 0; i + 1 < res.events.size(); ++i) {
    ASSERT_EQ(res.events[i].event, "chunk");
    joined += json::parse(res.events[i].data)["text"].get<std::string>();
  }
  ASSERT_EQ(res.events.back().event, "done");
  auto done = json::parse(res.events.back().data);
  EXPECT_EQ(done["text"].get<std::string>(), joined);
  EXPECT_EQ(done["session_id"].get<std::string>(), res.session_header);
  EXPECT_TRUE(find_bare_trial_ids(joined).empty());
  EXPECT_TRUE(done["elapsed_ms"].is_number_integer());
  auto store = h.service().state().store;
  for (const auto& row : done["evidence"]) {
    rdf::Triple typed{rdf::Iri(row["relation"].get<std::string>()), rdf::Iri(std::string(rdf::kRdfType)),
                      Vocabulary(testing::spec()).relation_class()};
    EXPECT_TRUE(store->contains(typed));
  }

  auto session = http_get(h.port(), "/api/session/" + res.session_header);
  ASSERT_EQ(session.status, 200);
  auto sj = json::parse(session.body);
  ASSERT_EQ(sj["history"].size(), 2u);
  EXPECT_EQ(sj["history"][1]["text"].get<std::string>(), joined);
}

TEST(ChatServer, SecondTurnCarriesHistory) {
  auto llm = scripted();
  ServerHarness h(llm);
  auto first = http_post(h.port(), "/api/chat", R"({"session_id": "t1", "question": "Which registry trials?"})");
  ASSERT_EQ(first.status, 200);
  auto second = http_post(h.port(), "/api/chat", R"({"session_id": "t1", "question": "What about smoking?"})");
  ASSERT_EQ(second.status, 200);
  auto first_text = json::parse(first.events.back().data)["text"].get<std::string>();
  auto req = llm->captured().back();
  ASSERT_EQ(req.messages.size(), 4u);
  EXPECT_EQ(req.messages[1].content, "Which registry trials?");
  EXPECT_EQ(req.messages[2].content, first_text);
}

TEST(ChatServer, BadRequests) {
  ServerHarness h(scripted());
  EXPECT_EQ(http_post(h.port(), "/api/chat", "not json").status, 400);
  EXPECT_EQ(http_post(h.port(), "/api/chat", "[]").status, 400);
  EXPECT_EQ(http_post(h.port(), "/api/chat", R"({"question": "  "})").status, 400);
  EXPECT_EQ(http_post(h.port(), "/api/chat", R"({"question": 3})").status, 400);
  EXPECT_EQ(http_post(h.port(), "/api/chat", R"({"question": "q", "session_id": 7})").status, 400);
  EXPECT_EQ(http_post(h.port(), "/api/chat", R"({"question": "q", "session_id": "a/b"})").status, 400);
  EXPECT_EQ(http_get(h.port(), "/api/session/unknown").status, 404);
  EXPECT_EQ(http_post(h.port(), "/api/ingest", "").status, 404);
}

TEST(ChatServer, ConcurrentChatOnSameSessionIsRejected) {
  auto gate = std::make_shared<GateClient>();
  ServerHarness h(gate);
  auto first = std::async(std::launch::async, [&] {
    return http_post(h.port(), "/api/chat", R"({"session_id": "busy", "question": "q"})");
  });
  gate->wait_entered();
  auto second = http_post(h.port(), "/api/chat", R"({"session_id": "busy", "question": "q2"})");
  EXPECT_EQ(second.status, 409);
  gate->release();
  auto r = first.get();
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.events.back().event, "done");
}

TEST(ChatServer, TransportFailureProducesErrorEvent) {
  class Down : public ChatCompletionClient {
   public:
    std::string complete(const CompletionRequest&) override { throw TransportError(0, "down"); }
    void stream(const CompletionRequest&, const DeltaCallback&) override { throw TransportError(0, "down"); }
  };
  ServerHarness h(std::make_shared<Down>());
  auto res = http_post(h.port(), "/api/chat", R"({"session_id": "d", "question": "q"})");
  ASSERT_EQ(res.status, 200);
  ASSERT_EQ(res.events.size(), 1u);
  EXPECT_EQ(res.events[0].event, "error");
  EXPECT_EQ(json::parse(res.events[0].data)["message"], "down");
  auto sj = json::parse(http_get(h.port(), "/api/session/d").body);
  EXPECT_EQ(sj["history"].size(), 1u);
}

TEST(ChatServer, IngestMergesAndReindexes) {
  auto llm = std::make_shared<ScriptedChatClient>(
      ScriptedChatClient::load_script(testing::mock_dir() / "extraction.json"));
  ServiceConfig cfg;
  cfg.enable_ingest = true;
  cfg.extraction.retry.sleep = [](std::chrono::milliseconds) {};
  ServerHarness h(llm, cfg);
  auto before = h.service().state();
  auto extra = R"({"publication_id": "NCT09999999", "text": "Smoking and advanced age were studied again."})";
  auto res = http_post(h.port(), "/api/ingest", std::string(extra) + "\n", "application/x-ndjson");
  ASSERT_EQ(res.status, 200) << res.body;
  auto after = h.service().state();
  EXPECT_GT(after.store->size(), before.store->size());
  for (const auto& t : before.store->triples()) EXPECT_TRUE(after.store->contains(t));
  EXPECT_GT(after.index->size(), before.index->size());
  EXPECT_TRUE(after.store->sealed());
  EXPECT_TRUE(after.index->frozen());
  EXPECT_EQ(http_post(h.port(), "/api/ingest", "{broken").status, 400);
}

}  // namespace
}  // namespace kgrag
