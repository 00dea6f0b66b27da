#include "trajeval/embedding/provider.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "trajeval/util/http.hpp"
#include "trajeval/util/text.hpp"

namespace trajeval::embedding {

using nlohmann::json;

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) throw Error("embedding provider: no url configured");
  if (config_.provider_id.empty()) config_.provider_id = config_.url;
  if (config_.max_attempts < 1) config_.max_attempts = 1;
}

std::vector<std::vector<double>> HttpProvider::embed_batch(const std::vector<std::string>& texts,
                                                           const std::vector<std::string>&) {
  std::string body = json{{"texts", texts}}.dump();
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.token.empty()) headers.emplace_back("Authorization", "Bearer " + config_.token);

  auto delay = config_.backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    util::HttpResponse res;
    try {
      res = util::post_json(config_.url, body, headers, config_.timeout);
    } catch (const util::TransportError& e) {
      last_error = e.what();
      continue;
    }
    if (res.status == 401 || res.status == 403)
      throw AuthError("embedding provider rejected credentials (HTTP " + std::to_string(res.status) + ")");
    if (res.status != 200) {
      last_error = "HTTP " + std::to_string(res.status);
      if (util::retryable_status(res.status)) continue;
      break;
    }
    try {
      json doc = json::parse(res.body);
      auto vectors = doc.at("vectors").get<std::vector<std::vector<double>>>();
      if (vectors.size() != texts.size())
        throw Error("provider returned " + std::to_string(vectors.size()) + " vectors for " +
                    std::to_string(texts.size()) + " texts");
      return vectors;
    } catch (const json::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
      break;
    }
  }
  throw Error("embedding request failed: " + last_error);
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": missing header");
  VectorStore store;
  try {
    json header = json::parse(line);
    store.dim_ = header.at("dim").get<std::size_t>();
    store.provider_id_ = header.at("provider_id").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(path.string() + ": bad header: " + e.what());
  }
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      json rec = json::parse(line);
      auto vec = rec.at("vector").get<std::vector<double>>();
      if (vec.size() != store.dim_)
        throw Error(path.string() + ":" + std::to_string(n) + ": vector has dimension " + std::to_string(vec.size()) +
                    ", header says " + std::to_string(store.dim_));
      store.vectors_[rec.at("content_hash").get<std::string>()] = std::move(vec);
    } catch (const json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return store;
}

void VectorStore::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << json{{"dim", dim_}, {"provider_id", provider_id_}}.dump() << '\n';
    for (const auto& [hash, vec] : vectors_) {
      json rec;
      rec["content_hash"] = hash;
      rec["vector"] = vec;
      out << rec.dump() << '\n';
    }
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

const std::vector<double>* VectorStore::find(const std::string& hash) const {
  auto it = vectors_.find(hash);
  return it == vectors_.end() ? nullptr : &it->second;
}

void VectorStore::put(const std::string& hash, std::vector<double> vector) {
  if (dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_)
    throw Error("vector store: dimension " + std::to_string(vector.size()) + " does not match " + std::to_string(dim_));
  vectors_[hash] = std::move(vector);
}

std::vector<std::vector<double>> PrecomputedProvider::embed_batch(const std::vector<std::string>&,
                                                                  const std::vector<std::string>& hashes) {
  std::vector<std::vector<double>> out;
  out.reserve(hashes.size());
  for (const auto& h : hashes) {
    const auto* v = store_.find(h);
    if (v == nullptr) throw Error("precomputed embeddings have no vector for content hash " + h);
    out.push_back(*v);
  }
  return out;
}

std::filesystem::path cache_path(const std::filesystem::path& cache_dir, const std::string& provider_id) {
  // Provider ids are often URLs; hash them into a safe file name.
  return cache_dir / (util::sha256_hex(provider_id).substr(0, 24) + ".jsonl");
}

EmbeddingSet embed(const std::vector<std::string>& codes, const std::vector<std::string>& keys, Provider& provider,
                   const EmbedOptions& options) {
  if (codes.size() != keys.size()) throw Error("embed: one key per code required");
  if (options.batch_size == 0) throw Error("embed: batch size must be positive");
  std::vector<std::string> hashes(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i].empty()) throw Error("embed: code for " + keys[i] + " is empty");
    hashes[i] = util::sha256_hex(codes[i]);
  }

  VectorStore cache(provider.id(), options.dim);
  std::filesystem::path cache_file;
  if (options.cache_dir) {
    cache_file = cache_path(*options.cache_dir, provider.id());
    if (std::filesystem::exists(cache_file)) {
      cache = VectorStore::load(cache_file);
      if (cache.provider_id() != provider.id())
        throw Error("embedding cache " + cache_file.string() + " belongs to provider " + cache.provider_id());
    }
  }

  // Unique texts not yet known, in first-appearance order.
  std::vector<std::size_t> pending;
  {
    std::unordered_map<std::string, bool> seen;
    for (std::size_t i = 0; i < codes.size(); ++i)
      if (cache.find(hashes[i]) == nullptr && seen.emplace(hashes[i], true).second) pending.push_back(i);
  }

  std::size_t n_batches = (pending.size() + options.batch_size - 1) / options.batch_size;
  std::vector<std::vector<std::vector<double>>> results(n_batches);
  std::vector<std::string> errors(n_batches);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&] {
    for (std::size_t b; !abort && (b = next++) < n_batches;) {
      std::vector<std::string> texts, batch_hashes;
      for (std::size_t j = b * options.batch_size; j < std::min(pending.size(), (b + 1) * options.batch_size); ++j) {
        texts.push_back(codes[pending[j]]);
        batch_hashes.push_back(hashes[pending[j]]);
      }
      try {
        results[b] = provider.embed_batch(texts, batch_hashes);
        if (results[b].size() != texts.size()) throw Error("provider returned the wrong number of vectors");
      } catch (const AuthError&) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      } catch (const Error& e) {
        errors[b] = e.what();
      }
    }
  };
  int width = std::clamp<int>(provider.max_in_flight(), 1, static_cast<int>(std::max<std::size_t>(1, n_batches)));
  std::vector<std::thread> pool;
  for (int i = 0; i < width; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  std::vector<std::size_t> failed;
  std::string first_error;
  for (std::size_t b = 0; b < n_batches; ++b) {
    if (!errors[b].empty()) {
      if (failed.empty()) first_error = errors[b];
      failed.push_back(b);
      continue;
    }
    for (std::size_t j = 0; j < results[b].size(); ++j) {
      auto& vec = results[b][j];
      std::size_t want = options.dim != 0 ? options.dim : cache.dim();
      if (want != 0 && vec.size() != want)
        throw Error("embedding dimension mismatch: provider returned " + std::to_string(vec.size()) + ", expected " +
                    std::to_string(want));
      cache.put(hashes[pending[b * options.batch_size + j]], std::move(vec));
    }
  }
  if (!cache_file.empty() && !pending.empty()) cache.save(cache_file);
  if (!failed.empty())
    throw ProviderError("embedding failed for " + std::to_string(failed.size()) + " batch(es): " + first_error, failed);
  if (options.dim != 0 && cache.size() > 0 && cache.dim() != options.dim)
    throw Error("embedding dimension mismatch: cached " + std::to_string(cache.dim()) + ", expected " +
                std::to_string(options.dim));

  EmbeddingSet set;
  set.keys = keys;
  set.provider_id = provider.id();
  set.matrix.resize(static_cast<Eigen::Index>(codes.size()), static_cast<Eigen::Index>(cache.dim()));
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto* v = cache.find(hashes[i]);
    set.matrix.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(v->data(), static_cast<Eigen::Index>(v->size()));
  }
  if (options.normalize) return normalized(set);
  validate(set);
  return set;
}

}  // namespace trajeval::embedding
