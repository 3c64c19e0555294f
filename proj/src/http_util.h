#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include <httplib.h>

namespace kgrag::http {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always begins with '/'
};

/// Splits an absolute http(s) URL. Throws std::invalid_argument otherwise.
ParsedUrl parse_url(std::string_view url);

/// Joins a base path and a suffix without doubling the '/'.
std::string join_path(std::string_view base, std::string_view suffix);

std::unique_ptr<httplib::Client> make_client(const ParsedUrl& url, std::chrono::seconds timeout);

}  // namespace kgrag::http
