#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajeval/embedding/embedding.hpp"
#include "trajeval/error.hpp"

namespace trajeval::embedding {

/// A provider call that still failed after all retries.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, std::vector<std::size_t> batch_indices)
      : Error(what), batch_indices_(std::move(batch_indices)) {}
  const std::vector<std::size_t>& batch_indices() const { return batch_indices_; }

 private:
  std::vector<std::size_t> batch_indices_;
};

/// The endpoint refused our credentials; retrying cannot help.
class AuthError : public Error {
 public:
  using Error::Error;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string id() const = 0;
  /// One vector per text, in order. `hashes` are the SHA-256 of the texts.
  virtual std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts,
                                                       const std::vector<std::string>& hashes) = 0;
  /// Calls that may be issued concurrently.
  virtual int max_in_flight() const { return 1; }
};

struct HttpProviderConfig {
  std::string url;  // http(s)://host[:port]/path
  std::string provider_id;
  std::string token;  // sent as a bearer token when non-empty
  std::chrono::milliseconds timeout{60000};
  int max_attempts = 4;
  std::chrono::milliseconds backoff{500};  // doubled after each failure
  int max_in_flight = 2;
};

/// POSTs {"texts": [...]} and expects {"vectors": [[...], ...]}.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config);
  std::string id() const override { return config_.provider_id; }
  std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts,
                                               const std::vector<std::string>& hashes) override;
  int max_in_flight() const override { return config_.max_in_flight; }

 private:
  HttpProviderConfig config_;
};

/// Vectors keyed by content hash: a header line {dim, provider_id} followed by
/// {content_hash, vector} lines. The same layout backs the disk cache.
class VectorStore {
 public:
  VectorStore() = default;
  VectorStore(std::string provider_id, std::size_t dim) : provider_id_(std::move(provider_id)), dim_(dim) {}

  static VectorStore load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const std::string& provider_id() const { return provider_id_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  const std::vector<double>* find(const std::string& hash) const;
  void put(const std::string& hash, std::vector<double> vector);

 private:
  std::string provider_id_;
  std::size_t dim_ = 0;
  std::map<std::string, std::vector<double>> vectors_;
};

/// Serves vectors from a precomputed file; a missing hash is an error.
class PrecomputedProvider : public Provider {
 public:
  explicit PrecomputedProvider(VectorStore store) : store_(std::move(store)) {}
  std::string id() const override { return store_.provider_id(); }
  std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts,
                                               const std::vector<std::string>& hashes) override;

 private:
  VectorStore store_;
};

struct EmbedOptions {
  std::size_t dim = 0;  // expected dimension; 0 accepts the provider's
  bool normalize = true;
  std::size_t batch_size = 32;
  std::optional<std::filesystem::path> cache_dir;
};

/// Embeds `codes` (row i for codes[i], keyed by keys[i]). Identical texts are
/// sent once and share a row value. Cached vectors are never re-requested.
EmbeddingSet embed(const std::vector<std::string>& codes, const std::vector<std::string>& keys, Provider& provider,
                   const EmbedOptions& options = {});

/// Path of the cache file for a provider inside `cache_dir`.
std::filesystem::path cache_path(const std::filesystem::path& cache_dir, const std::string& provider_id);

}  // namespace trajeval::embedding
