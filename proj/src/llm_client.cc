#include "kgrag/llm_client.h"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "http_util.h"
#include "kgrag/sse.h"
#include "kgrag/text_util.h"

namespace kgrag {
namespace {

using nlohmann::json;

json request_body(const CompletionRequest& request, bool stream) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", request.model},
          {"messages", std::move(messages)},
          {"temperature", request.temperature},
          {"max_tokens", request.max_tokens},
          {"stream", stream}};
}

httplib::Headers auth_headers(const std::string& api_key) {
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
  return headers;
}

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 200;
  return std::string(body.substr(0, kMax));
}

// Publication ids cited in rendered context lines, in first-seen order.
std::vector<std::string> cited_sources(std::string_view system_text) {
  std::vector<std::string> ids;
  constexpr std::string_view kMarker = "(source: ";
  std::size_t pos = system_text.find(kMarker);
  while (pos != std::string_view::npos) {
    std::size_t start = pos + kMarker.size();
    std::size_t end = system_text.find(')', start);
    if (end == std::string_view::npos) break;
    std::string id(system_text.substr(start, end - start));
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(std::move(id));
    pos = system_text.find(kMarker, end);
  }
  return ids;
}

void replace_all(std::string& s, std::string_view what, std::string_view with) {
  for (std::size_t pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + with.size())) {
    s.replace(pos, what.size(), with);
  }
}

}  // namespace

OpenAiChatClient::OpenAiChatClient(Options options) : options_(std::move(options)) {}

std::string OpenAiChatClient::complete(const CompletionRequest& request) {
  auto url = http::parse_url(options_.base_url);
  auto client = http::make_client(url, options_.timeout);
  auto res = client->Post(http::join_path(url.path, "chat/completions"), auth_headers(options_.api_key),
                          request_body(request, false).dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
  if (!res) throw TransportError(0, "chat completion request failed: " + httplib::to_string(res.error()));
  if (res->status / 100 != 2) {
    throw TransportError(res->status, "chat completion returned HTTP " + std::to_string(res->status) + ": " +
                                          excerpt(res->body));
  }
  try {
    auto body = json::parse(res->body);
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(res->status, std::string("malformed chat completion response: ") + e.what());
  }
}

void OpenAiChatClient::stream(const CompletionRequest& request, const DeltaCallback& on_delta) {
  auto url = http::parse_url(options_.base_url);
  auto client = http::make_client(url, options_.timeout);

  httplib::Request req;
  req.method = "POST";
  req.path = http::join_path(url.path, "chat/completions");
  req.headers = auth_headers(options_.api_key);
  req.headers.emplace("Accept", "text/event-stream");
  req.body = request_body(request, true).dump(-1, ' ', false, json::error_handler_t::replace);
  req.set_header("Content-Type", "application/json");

  int status = 0;
  std::string error_body;
  SseParser parser;
  std::string protocol_error;
  req.response_handler = [&](const httplib::Response& r) {
    status = r.status;
    return true;
  };
  req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
    if (status / 100 != 2) {
      error_body.append(data, len);
      return true;
    }
    for (auto& ev : parser.feed(std::string_view(data, len))) {
      if (ev.data == "[DONE]") continue;
      try {
        auto chunk = json::parse(ev.data);
        const auto& choice = chunk.at("choices").at(0);
        if (auto d = choice.find("delta"); d != choice.end()) {
          if (auto c = d->find("content"); c != d->end() && c->is_string()) {
            const auto& s = c->get_ref<const std::string&>();
            if (!s.empty()) on_delta(s);
          }
        }
      } catch (const json::exception& e) {
        protocol_error = std::string("malformed stream chunk: ") + e.what();
        return false;
      }
    }
    return true;
  };

  auto res = client->send(req);
  if (!protocol_error.empty()) throw TransportError(status, protocol_error);
  if (!res) throw TransportError(0, "chat stream failed: " + httplib::to_string(res.error()));
  if (res->status / 100 != 2) {
    throw TransportError(res->status, "chat stream returned HTTP " + std::to_string(res->status) + ": " +
                                          excerpt(error_body));
  }
}

ScriptedChatClient::ScriptedChatClient(Script script) : script_(std::move(script)) {
  if (script_.chunk_size == 0) script_.chunk_size = 1;
}

ScriptedChatClient::Script ScriptedChatClient::load_script(const std::filesystem::path& path) {
  json doc = json::parse(text::read_file(path));
  Script script;
  for (const auto& r : doc.value("rules", json::array())) {
    script.rules.push_back({r.at("match").get<std::string>(), r.at("response").get<std::string>()});
  }
  script.fallback = doc.value("fallback", std::string());
  script.chunk_size = doc.value("chunk_size", std::size_t{7});
  return script;
}

std::string ScriptedChatClient::response_for(const CompletionRequest& request) const {
  std::string_view question;
  std::string_view system;
  for (const auto& m : request.messages) {
    if (m.role == "user") question = m.content;
    if (m.role == "system" && system.empty()) system = m.content;
  }
  for (const auto& rule : script_.rules) {
    if (question.find(rule.match) != std::string_view::npos) return rule.response;
  }
  std::string out = script_.fallback;
  auto ids = cited_sources(system);
  std::string sources;
  for (const auto& id : ids) {
    if (!sources.empty()) sources += ", ";
    sources += id;
  }
  if (sources.empty()) sources = "no additional references were found";
  replace_all(out, "{sources}", sources);
  replace_all(out, "{question}", question);
  return out;
}

std::string ScriptedChatClient::complete(const CompletionRequest& request) {
  record(request);
  return response_for(request);
}

void ScriptedChatClient::stream(const CompletionRequest& request, const DeltaCallback& on_delta) {
  record(request);
  for (const auto& piece : split_utf8_chunks(response_for(request), script_.chunk_size)) on_delta(piece);
}

void ScriptedChatClient::set_capture_file(std::filesystem::path path) {
  std::lock_guard lock(mu_);
  capture_file_ = std::move(path);
}

std::vector<CompletionRequest> ScriptedChatClient::captured() const {
  std::lock_guard lock(mu_);
  return captured_;
}

void ScriptedChatClient::record(const CompletionRequest& request) {
  std::lock_guard lock(mu_);
  captured_.push_back(request);
  if (capture_file_) {
    std::ofstream out(*capture_file_, std::ios::app);
    out << request_body(request, false).dump(-1, ' ', false, json::error_handler_t::replace) << "\n";
  }
}

std::vector<std::string> split_utf8_chunks(std::string_view text, std::size_t chunk_size) {
  std::vector<std::string> out;
  if (chunk_size == 0) chunk_size = 1;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = std::min(text.size(), pos + chunk_size);
    // Back off continuation bytes (10xxxxxx) so the cut lands on a code point.
    while (end < text.size() && end > pos && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) --end;
    if (end == pos) {
      end = pos + 1;
      while (end < text.size() && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) ++end;
    }
    out.emplace_back(text.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

}  // namespace kgrag
