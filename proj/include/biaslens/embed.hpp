// Copyright 2026 The biaslens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Text embeddings: a remote HTTP provider, a deterministic hashed
// bag-of-tokens fallback, a content-addressed cache, and cosine similarity.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "biaslens/corpus.hpp"
#include "biaslens/error.hpp"
#include "biaslens/http.hpp"
#include "biaslens/random.hpp"
#include "biaslens/text.hpp"
#include "json.hpp"

namespace biaslens {

class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    require(!values_.empty(), ErrorKind::kInvalidArgument, "embedding has zero dimensions");
    for (double v : values_) {
      require(std::isfinite(v), ErrorKind::kInvalidArgument,
              "embedding has a non-finite component");
    }
  }

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

// (a . b) / (|a| |b|), clamped to [-1, 1].
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  require(a.dim() == b.dim(), ErrorKind::kInvalidArgument,
          "cosine_similarity: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
              std::to_string(b.dim()) + ")");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  require(na > 0.0 && nb > 0.0, ErrorKind::kInvalidArgument,
          "cosine_similarity: zero-norm operand");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// Hashed bag of tokens. Each lowercased token is hashed with FNV-1a 64
// (offset basis xor splitmix64(seed)) and finalized with splitmix64; the low
// bits mod dim pick the coordinate and the top bit picks the sign. Counts
// are accumulated and the result is L2-normalized.
inline EmbeddingVector fallback_embed(std::string_view input, std::size_t dim,
                                      std::uint64_t seed) {
  require(dim >= 8, ErrorKind::kInvalidArgument, "fallback_embed: dim must be >= 8");
  const auto tokens = text::tokenize(input);
  require(!tokens.empty(), ErrorKind::kInvalidArgument,
          "fallback_embed: text has no tokens");
  const std::uint64_t basis = 0xCBF29CE484222325ULL ^ splitmix64(seed);
  std::vector<double> acc(dim, 0.0);
  for (const auto& tok : tokens) {
    std::uint64_t h = basis;
    for (unsigned char c : tok.folded) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
    const std::uint64_t m = splitmix64(h);
    acc[m % dim] += (m >> 63) ? -1.0 : 1.0;
  }
  double n = 0.0;
  for (double v : acc) n += v * v;
  n = std::sqrt(n);
  require(n > 0.0, ErrorKind::kInvalidArgument,
          "fallback_embed: token hashes cancelled to a zero vector");
  for (double& v : acc) v /= n;
  return EmbeddingVector(std::move(acc));
}

enum class ProviderKind { kRemote, kFallback };

inline std::string_view to_string(ProviderKind kind) {
  return kind == ProviderKind::kRemote ? "remote" : "fallback";
}

struct EmbeddingProviderConfig {
  ProviderKind kind = ProviderKind::kFallback;
  std::string endpoint;    // remote only
  std::string model_name;  // remote only
  std::size_t dim = 256;
  std::size_t batch_size = 32;
  std::chrono::milliseconds timeout{30000};
  std::uint64_t seed = 0;  // fallback only

  // Cache validity key. The fallback seed is part of it because it changes
  // every vector.
  std::string fingerprint() const {
    std::string fp = std::string(to_string(kind)) + "|" +
                     (kind == ProviderKind::kRemote ? model_name : "hashed-bow") + "|" +
                     std::to_string(dim);
    if (kind == ProviderKind::kFallback) fp += "|seed=" + std::to_string(seed);
    return fp;
  }

  void validate() const {
    require(dim > 0, ErrorKind::kInvalidArgument, "embedding dim must be positive");
    require(batch_size > 0, ErrorKind::kInvalidArgument, "batch size must be positive");
    if (kind == ProviderKind::kRemote) {
      require(!endpoint.empty(), ErrorKind::kInvalidArgument,
              "remote embedding provider needs an endpoint");
    } else {
      require(dim >= 8, ErrorKind::kInvalidArgument, "fallback embedding dim must be >= 8");
    }
  }
};

// Content-addressed store of embeddings for one provider fingerprint.
// Concurrent lookups are allowed; inserts take an exclusive lock.
class EmbeddingCache {
 public:
  static constexpr std::string_view kFormat = "biaslens.embedding_cache/1";

  explicit EmbeddingCache(std::string fingerprint) : fingerprint_(std::move(fingerprint)) {}

  EmbeddingCache(const EmbeddingCache& other) : fingerprint_(other.fingerprint_) {
    std::shared_lock lock(other.mu_);
    store_ = other.store_;
  }

  const std::string& fingerprint() const { return fingerprint_; }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return store_.size();
  }

  std::optional<EmbeddingVector> find(const ContentHash& key) const {
    std::shared_lock lock(mu_);
    auto it = store_.find(key.hex);
    if (it == store_.end()) return std::nullopt;
    return it->second;
  }

  void insert(const ContentHash& key, EmbeddingVector v) {
    std::unique_lock lock(mu_);
    store_.insert_or_assign(key.hex, std::move(v));
  }

  void check_compatible(const EmbeddingProviderConfig& config) const {
    require(config.fingerprint() == fingerprint_, ErrorKind::kInvalidArgument,
            "embedding cache fingerprint '" + fingerprint_ +
                "' does not match provider '" + config.fingerprint() + "'");
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["format"] = kFormat;
    j["fingerprint"] = fingerprint_;
    nlohmann::json entries = nlohmann::json::object();
    {
      std::shared_lock lock(mu_);
      for (const auto& [k, v] : store_) {
        entries[k] = std::vector<double>(v.values().begin(), v.values().end());
      }
    }
    j["entries"] = std::move(entries);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::kIo, "cannot write cache " + path.string());
    out << j.dump() << '\n';
    require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path.string());
  }

  static EmbeddingCache load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::kIo, "cannot open cache " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorKind::kParse, path.string() + ": malformed cache: " + ex.what());
    }
    try {
      require(j.at("format").get<std::string>() == kFormat, ErrorKind::kParse,
              path.string() + ": unknown cache format");
      EmbeddingCache cache(j.at("fingerprint").get<std::string>());
      for (const auto& [k, v] : j.at("entries").items()) {
        cache.store_.emplace(k, EmbeddingVector(v.get<std::vector<double>>()));
      }
      return cache;
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorKind::kParse, path.string() + ": malformed cache: " + ex.what());
    }
  }

  // Loads `path` when it exists, otherwise starts empty. Either way the
  // result must match `config`.
  static EmbeddingCache open(const std::filesystem::path& path,
                             const EmbeddingProviderConfig& config) {
    EmbeddingCache cache = std::filesystem::exists(path)
                               ? load(path)
                               : EmbeddingCache(config.fingerprint());
    cache.check_compatible(config);
    return cache;
  }

 private:
  std::string fingerprint_;
  std::map<std::string, EmbeddingVector> store_;
  mutable std::shared_mutex mu_;
};

namespace detail {

inline std::vector<EmbeddingVector> remote_embed(const EmbeddingProviderConfig& config,
                                                 std::span<const std::string> texts) {
  nlohmann::json body;
  body["model"] = config.model_name;
  body["input"] = texts;
  const nlohmann::json res =
      http::post_json(config.endpoint, body, {.timeout = config.timeout});
  const auto emb = res.find("embeddings");
  require(emb != res.end() && emb->is_array() && emb->size() == texts.size(),
          ErrorKind::kProvider,
          config.endpoint + ": expected \"embeddings\" with " +
              std::to_string(texts.size()) + " rows");
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& row : *emb) {
    std::vector<double> values;
    try {
      values = row.get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorKind::kProvider, config.endpoint + ": embedding row is not a float array");
    }
    require(values.size() == config.dim, ErrorKind::kProvider,
            config.endpoint + ": provider returned dim " + std::to_string(values.size()) +
                ", configured dim is " + std::to_string(config.dim));
    for (double v : values) {
      require(std::isfinite(v), ErrorKind::kProvider,
              config.endpoint + ": provider returned a non-finite component");
    }
    out.emplace_back(std::move(values));
  }
  return out;
}

}  // namespace detail

// Output order matches input order. Cache misses are deduplicated and sent
// to the provider in chunks of batch_size.
inline std::vector<EmbeddingVector> embed_batch(const EmbeddingProviderConfig& config,
                                                EmbeddingCache& cache,
                                                std::span<const std::string> texts) {
  config.validate();
  cache.check_compatible(config);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    require(!text::trim(texts[i]).empty(), ErrorKind::kInvalidArgument,
            "embed_batch: text at index " + std::to_string(i) + " is empty");
  }

  std::vector<ContentHash> keys;
  keys.reserve(texts.size());
  std::vector<std::size_t> misses;  // first index of each uncached text
  std::unordered_map<std::string, bool> queued;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    keys.push_back(content_hash(texts[i]));
    if (!cache.find(keys.back()) && queued.emplace(keys.back().hex, true).second) {
      misses.push_back(i);
    }
  }

  if (config.kind == ProviderKind::kFallback) {
    for (std::size_t i : misses) {
      try {
        cache.insert(keys[i], fallback_embed(texts[i], config.dim, config.seed));
      } catch (const Error& ex) {
        fail(ex.kind(), "embed_batch: index " + std::to_string(i) + ": " + ex.what());
      }
    }
  } else {
    for (std::size_t start = 0; start < misses.size(); start += config.batch_size) {
      const std::size_t stop = std::min(misses.size(), start + config.batch_size);
      std::vector<std::string> chunk;
      for (std::size_t m = start; m < stop; ++m) chunk.push_back(texts[misses[m]]);
      std::vector<EmbeddingVector> rows;
      try {
        rows = detail::remote_embed(config, chunk);
      } catch (const Error& ex) {
        fail(ex.kind(), "embed_batch: batch starting at index " +
                            std::to_string(misses[start]) + ": " + ex.what());
      }
      for (std::size_t m = start; m < stop; ++m) {
        cache.insert(keys[misses[m]], std::move(rows[m - start]));
      }
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& key : keys) out.push_back(*cache.find(key));
  return out;
}

inline std::vector<EmbeddingVector> embed_batch(const EmbeddingProviderConfig& config,
                                                EmbeddingCache& cache,
                                                const std::vector<std::string>& texts) {
  return embed_batch(config, cache, std::span<const std::string>(texts));
}

inline EmbeddingVector embed_text(const EmbeddingProviderConfig& config,
                                  EmbeddingCache& cache, const std::string& input) {
  require(!text::trim(input).empty(), ErrorKind::kInvalidArgument,
          "embed_text: text is empty");
  return embed_batch(config, cache, std::span<const std::string>(&input, 1)).front();
}

}  // namespace biaslens
