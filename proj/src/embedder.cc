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

#include "kgrag/embedder.h"

#include <cmath>

#include <nlohmann/json.hpp>

#include "http_util.h"
#include "kgrag/llm_client.h"
#include "kgrag/text_util.h"

namespace kgrag {

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) const {
  std::vector<double> v(dim_, 0.0);
  std::string norm = text::collapse_whitespace(text::to_lower(text));
  if (norm.empty()) return EmbeddingVector(std::move(v));

  std::string padded = " " + norm + " ";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    v[fnv1a64(std::string_view(padded).substr(i, 3)) % dim_] += 1.0;
  }
  for (const auto& word : text::split_words(norm)) v[fnv1a64("w:" + word) % dim_] += 1.0;

  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return EmbeddingVector(std::move(v));
}

HttpEmbedder::HttpEmbedder(Options options) : options_(std::move(options)) {}

EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
  http::ParsedUrl url;
  try {
    url = http::parse_url(options_.url);
  } catch (const std::invalid_argument& e) {
    throw TransportError(0, e.what());
  }
  auto client = http::make_client(url, options_.timeout);
  nlohmann::json body = {{"text", std::string(text)}};
  auto res = client->Post(url.path, body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace),
                          "application/json");
  if (!res) throw TransportError(0, "embedding request failed: " + httplib::to_string(res.error()));
  if (res->status / 100 != 2) {
    throw TransportError(res->status, "embedding service returned HTTP " + std::to_string(res->status));
  }
  std::vector<double> values;
  try {
    values = nlohmann::json::parse(res->body).at("vector").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(res->status, std::string("malformed embedding response: ") + e.what());
  }
  if (values.size() != options_.dim) throw DimensionMismatch(options_.dim, values.size());
  return EmbeddingVector(std::move(values));
}

}  // namespace kgrag
