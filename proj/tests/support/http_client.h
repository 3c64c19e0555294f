#pragma once

#include <string>
#include <vector>

#include "kgrag/sse.h"

namespace kgrag::testing {

struct HttpResult {
  int status = 0;  // 0 when no response arrived
  std::string content_type;
  std::string session_header;  // X-Session-Id
  std::string body;
  std::vector<SseEvent> events;  // decoded when the body is an event stream
};

HttpResult http_get(int port, const std::string& path);
HttpResult http_post(int port, const std::string& path, const std::string& body,
                     const std::string& content_type = "application/json");

}  // namespace kgrag::testing
