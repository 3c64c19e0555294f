#include "http_util.h"

#include <stdexcept>

#include "kgrag/sse.h"
#include "kgrag/text_util.h"

namespace kgrag {
namespace http {

ParsedUrl parse_url(std::string_view url) {
  std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw std::invalid_argument("not an absolute URL: " + std::string(url));
  std::string scheme = text::to_lower(url.substr(0, scheme_end));
  if (scheme != "http" && scheme != "https") throw std::invalid_argument("unsupported URL scheme: " + scheme);
  std::size_t host_start = scheme_end + 3;
  std::size_t path_start = url.find('/', host_start);
  std::string_view host = url.substr(host_start, path_start == std::string_view::npos ? std::string_view::npos
                                                                                       : path_start - host_start);
  if (host.empty()) throw std::invalid_argument("URL has no host: " + std::string(url));
  ParsedUrl out;
  out.origin = scheme + "://" + std::string(host);
  out.path = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
  return out;
}

std::string join_path(std::string_view base, std::string_view suffix) {
  std::string out(base);
  while (!out.empty() && out.back() == '/') out.pop_back();
  if (suffix.empty() || suffix.front() != '/') out.push_back('/');
  out.append(suffix);
  return out;
}

std::unique_ptr<httplib::Client> make_client(const ParsedUrl& url, std::chrono::seconds timeout) {
  auto client = std::make_unique<httplib::Client>(url.origin);
  client->set_connection_timeout(10, 0);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  return client;
}

}  // namespace http

std::vector<SseEvent> SseParser::feed(std::string_view bytes) {
  std::vector<SseEvent> out;
  buffer_.append(bytes);
  std::size_t start = 0;
  for (;;) {
    std::size_t nl = buffer_.find('\n', start);
    if (nl == std::string::npos) break;
    std::string_view line(buffer_.data() + start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    dispatch_line(line, out);
    start = nl + 1;
  }
  buffer_.erase(0, start);
  return out;
}

void SseParser::dispatch_line(std::string_view line, std::vector<SseEvent>& out) {
  if (line.empty()) {
    if (has_data_) out.push_back(std::move(pending_));
    pending_ = SseEvent{};
    has_data_ = false;
    return;
  }
  if (line.front() == ':') return;
  std::size_t colon = line.find(':');
  std::string_view field = line.substr(0, colon);
  std::string_view value = colon == std::string_view::npos ? std::string_view{} : line.substr(colon + 1);
  if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
  if (field == "event") {
    pending_.event = std::string(value);
  } else if (field == "data") {
    if (has_data_) pending_.data.push_back('\n');
    pending_.data.append(value);
    has_data_ = true;
  }
}

std::string format_sse_event(std::string_view event, std::string_view data) {
  std::string out = "event: " + std::string(event) + "\n";
  for (std::string_view line : text::split_lines(data)) {
    out += "data: ";
    out.append(line);
    out += "\n";
  }
  if (data.empty()) out += "data: \n";
  out += "\n";
  return out;
}

}  // namespace kgrag
