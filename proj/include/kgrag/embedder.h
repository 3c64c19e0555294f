#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>

#include "kgrag/vector_index.h"

namespace kgrag {

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
};

/// Offline fallback: lower-cased character trigrams (with a space pad on both
/// sides) and whole words are hashed with FNV-1a into `dim` buckets, then the
/// counts are L2-normalized. Empty text maps to the zero vector.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = kDefaultEmbeddingDim);
  std::size_t dim() const override { return dim_; }
  EmbeddingVector embed(std::string_view text) const override;

 private:
  std::size_t dim_;
};

/// Embedding service: POST {"text": ...} -> {"vector": [...]}.
class HttpEmbedder final : public Embedder {
 public:
  struct Options {
    std::string url;
    std::size_t dim = kDefaultEmbeddingDim;
    std::chrono::seconds timeout{60};
  };

  explicit HttpEmbedder(Options options);
  std::size_t dim() const override { return options_.dim; }
  EmbeddingVector embed(std::string_view text) const override;

 private:
  Options options_;
};

std::uint64_t fnv1a64(std::string_view data) noexcept;

}  // namespace kgrag
