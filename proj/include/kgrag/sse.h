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

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

struct SseEvent {
  std::string event = "message";
  std::string data;
};

/// Incremental server-sent-events decoder. Feed arbitrary byte slices; whole
/// events come out as soon as their terminating blank line arrives.
class SseParser {
 public:
  std::vector<SseEvent> feed(std::string_view bytes);

 private:
  void dispatch_line(std::string_view line, std::vector<SseEvent>& out);

  std::string buffer_;
  SseEvent pending_;
  bool has_data_ = false;
};

/// Encodes one event. Multi-line payloads are split into several data lines.
std::string format_sse_event(std::string_view event, std::string_view data);

}  // namespace kgrag
