#include <algorithm>
#include <atomic>
#include <cctype>
#include <ctime>
#include <fstream>
#include <set>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "trajeval/genharness/genharness.hpp"
#include "trajeval/util/http.hpp"
#include "trajeval/util/text.hpp"

namespace trajeval::genharness {

using nlohmann::ordered_json;

std::string to_string(RecordStatus status) {
  switch (status) {
    case RecordStatus::Ok:
      return "ok";
    case RecordStatus::ExtractionFailed:
      return "extraction_failed";
    case RecordStatus::Error:
      return "error";
  }
  return "error";
}

RecordStatus parse_record_status(std::string_view text) {
  if (text == "ok") return RecordStatus::Ok;
  if (text == "extraction_failed") return RecordStatus::ExtractionFailed;
  if (text == "error") return RecordStatus::Error;
  throw Error("unknown record status '" + std::string(text) + "'");
}

namespace {

std::string tidy(std::string code) {
  code.erase(std::remove(code.begin(), code.end(), '\r'), code.end());
  std::size_t first = 0;
  // Drop blank lines before the code but keep its indentation.
  for (std::size_t i = 0; i < code.size(); ++i) {
    if (code[i] == '\n') first = i + 1;
    else if (code[i] != ' ' && code[i] != '\t') break;
  }
  code.erase(0, first);
  while (!code.empty() && std::isspace(static_cast<unsigned char>(code.back()))) code.pop_back();
  if (code.empty()) return code;
  return code + "\n";
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::optional<std::string> extract_code(std::string_view response, const std::string& open, const std::string& close) {
  if (std::size_t a = response.find(open); a != std::string_view::npos) {
    std::size_t start = a + open.size();
    if (std::size_t b = response.find(close, start); b != std::string_view::npos) {
      std::string code = tidy(std::string(response.substr(start, b - start)));
      if (!code.empty()) return code;
      return std::nullopt;
    }
  }
  // Fenced block: ``` with an optional language tag, closed by ``` at the
  // start of a line.
  std::size_t fence = response.find("```");
  if (fence == std::string_view::npos) return std::nullopt;
  std::size_t body = response.find('\n', fence);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  std::size_t end = body;
  while (true) {
    std::size_t f = response.find("```", end);
    if (f == std::string_view::npos) return std::nullopt;
    if (f == body || response[f - 1] == '\n') {
      end = f;
      break;
    }
    end = f + 3;
  }
  std::string code = tidy(std::string(response.substr(body, end - body)));
  if (code.empty()) return std::nullopt;
  return code;
}

std::string request_body(const Prompt& prompt, const EndpointConfig& endpoint, const SamplingParams& sampling) {
  ordered_json j;
  j["model"] = endpoint.model;
  j["messages"] = ordered_json::array();
  if (!prompt.system.empty()) j["messages"].push_back({{"role", "system"}, {"content", prompt.system}});
  j["messages"].push_back({{"role", "user"}, {"content", prompt.user}});
  j["temperature"] = sampling.temperature;
  j["top_p"] = sampling.top_p;
  if (sampling.top_k) j["top_k"] = *sampling.top_k;
  if (sampling.min_p) j["min_p"] = *sampling.min_p;
  if (sampling.max_tokens) j["max_tokens"] = *sampling.max_tokens;
  return j.dump();
}

TokenBucket::TokenBucket(double rate_per_second, int burst)
    : rate_(rate_per_second), capacity_(std::max(1, burst)), tokens_(std::max(1, burst)),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  if (!(rate_ > 0.0)) return;  // unlimited
  std::unique_lock<std::mutex> lock(mutex_);
  while (true) {
    auto now = std::chrono::steady_clock::now();
    tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

std::vector<GenerationRecord> generate(const std::vector<Prompt>& prompts, const EndpointConfig& endpoint,
                                       const SamplingParams& sampling) {
  if (endpoint.url.empty()) throw Error("generation endpoint has no url");
  std::string endpoint_id = endpoint.endpoint_id.empty() ? endpoint.model + "@" + endpoint.url : endpoint.endpoint_id;
  std::vector<std::pair<std::string, std::string>> headers;
  if (!endpoint.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + endpoint.api_key);

  std::vector<GenerationRecord> records(prompts.size());
  TokenBucket bucket(endpoint.requests_per_second, endpoint.burst);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto run_one = [&](std::size_t i) {
    const Prompt& p = prompts[i];
    GenerationRecord& r = records[i];
    r.example = p.example;
    r.template_id = p.template_id;
    r.endpoint_id = endpoint_id;
    r.sampling = sampling;
    r.prompt_sha256 = util::sha256_hex(p.system + "\n\n" + p.user);
    std::string body = request_body(p, endpoint, sampling);
    auto delay = endpoint.backoff;
    for (int attempt = 1; attempt <= std::max(1, endpoint.max_attempts); ++attempt) {
      if (abort) return;
      if (attempt > 1) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      bucket.acquire();
      r.attempts = attempt;
      util::HttpResponse res;
      try {
        res = util::post_json(endpoint.url, body, headers, endpoint.timeout);
      } catch (const util::TransportError& e) {
        r.error = e.what();
        continue;
      }
      if (res.status == 401 || res.status == 403)
        throw AuthError("endpoint " + endpoint_id + " rejected credentials (HTTP " + std::to_string(res.status) + ")");
      if (res.status != 200) {
        r.error = "HTTP " + std::to_string(res.status);
        if (util::retryable_status(res.status)) continue;
        break;
      }
      try {
        auto doc = ordered_json::parse(res.body);
        r.raw_response = doc.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const ordered_json::exception& e) {
        r.error = std::string("malformed response: ") + e.what();
        break;
      }
      r.error.clear();
      r.code = extract_code(r.raw_response);
      r.status = r.code ? RecordStatus::Ok : RecordStatus::ExtractionFailed;
      if (!r.code) r.error = "no code block in response";
      break;
    }
    r.created_at = utc_now();
  };

  auto worker = [&] {
    for (std::size_t i; !abort && (i = next++) < prompts.size();) {
      try {
        run_one(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      }
    }
  };
  int width = std::clamp<int>(endpoint.concurrency, 1, static_cast<int>(std::max<std::size_t>(1, prompts.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < width; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);
  return records;
}

std::string record_to_json(const GenerationRecord& r) {
  ordered_json j;
  j["example"] = {{"student_id", r.example.student_id},   {"problem_id", r.example.problem_id},
                  {"semester", r.example.semester},       {"attempt_index", r.example.attempt_index},
                  {"timestamp_ms", r.example.timestamp_ms}, {"stage", r.example.stage},
                  {"with_context", r.example.with_context}};
  j["template_id"] = r.template_id;
  j["endpoint_id"] = r.endpoint_id;
  ordered_json s;
  s["temperature"] = r.sampling.temperature;
  s["top_p"] = r.sampling.top_p;
  s["top_k"] = r.sampling.top_k ? ordered_json(*r.sampling.top_k) : ordered_json(nullptr);
  s["min_p"] = r.sampling.min_p ? ordered_json(*r.sampling.min_p) : ordered_json(nullptr);
  s["max_tokens"] = r.sampling.max_tokens ? ordered_json(*r.sampling.max_tokens) : ordered_json(nullptr);
  j["sampling"] = s;
  j["prompt_sha256"] = r.prompt_sha256;
  j["status"] = to_string(r.status);
  j["raw_response"] = r.raw_response;
  j["code"] = r.code ? ordered_json(*r.code) : ordered_json(nullptr);
  j["error"] = r.error;
  j["attempts"] = r.attempts;
  j["created_at"] = r.created_at;
  return j.dump();
}

GenerationRecord record_from_json(const std::string& line) {
  GenerationRecord r;
  try {
    auto j = ordered_json::parse(line);
    const auto& e = j.at("example");
    r.example.student_id = e.at("student_id").get<std::string>();
    r.example.problem_id = e.at("problem_id").get<std::string>();
    r.example.semester = e.value("semester", "");
    r.example.attempt_index = e.at("attempt_index").get<int>();
    r.example.timestamp_ms = e.value("timestamp_ms", std::int64_t{0});
    r.example.stage = e.value("stage", "");
    r.example.with_context = e.value("with_context", false);
    r.template_id = j.value("template_id", "");
    r.endpoint_id = j.value("endpoint_id", "");
    if (auto it = j.find("sampling"); it != j.end()) {
      const auto& s = *it;
      r.sampling.temperature = s.value("temperature", r.sampling.temperature);
      r.sampling.top_p = s.value("top_p", r.sampling.top_p);
      r.sampling.top_k = s.contains("top_k") && !s["top_k"].is_null() ? std::optional<int>(s["top_k"].get<int>())
                                                                       : std::nullopt;
      r.sampling.min_p = s.contains("min_p") && !s["min_p"].is_null()
                             ? std::optional<double>(s["min_p"].get<double>())
                             : std::nullopt;
      r.sampling.max_tokens = s.contains("max_tokens") && !s["max_tokens"].is_null()
                                  ? std::optional<int>(s["max_tokens"].get<int>())
                                  : std::nullopt;
    }
    r.prompt_sha256 = j.value("prompt_sha256", "");
    r.status = parse_record_status(j.at("status").get<std::string>());
    r.raw_response = j.value("raw_response", "");
    if (j.contains("code") && !j["code"].is_null()) r.code = j["code"].get<std::string>();
    r.error = j.value("error", "");
    r.attempts = j.value("attempts", 0);
    r.created_at = j.value("created_at", "");
  } catch (const ordered_json::exception& e) {
    throw Error(std::string("bad generation record: ") + e.what());
  }
  return r;
}

Ledger::Ledger(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void Ledger::append(const GenerationRecord& record) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to " + path_.string());
  out << record_to_json(record) << '\n';
  out.flush();
  if (!out) throw Error("write failed: " + path_.string());
}

std::vector<GenerationRecord> Ledger::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<GenerationRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

CandidateBuild records_to_corpus(const std::vector<GenerationRecord>& records,
                                 const std::map<std::string, corpus::ProblemSpec>& problems) {
  CandidateBuild out;
  std::set<std::tuple<std::string, std::string, int>> seen;
  std::vector<corpus::Submission> subs;
  for (const auto& r : records) {
    if (r.status != RecordStatus::Ok || !r.code) {
      ++out.excluded;
      continue;
    }
    auto key = std::make_tuple(r.example.student_id, r.example.problem_id, r.example.attempt_index);
    if (!seen.insert(key).second) {
      ++out.duplicates;
      out.warnings.push_back("duplicate generation for " + r.example.student_id + "/" + r.example.problem_id +
                             " attempt " + std::to_string(r.example.attempt_index) + "; keeping the first");
      continue;
    }
    corpus::Submission s;
    s.student_id = r.example.student_id;
    s.problem_id = r.example.problem_id;
    s.semester = r.example.semester;
    s.timestamp_ms = r.example.timestamp_ms;
    s.code = *r.code;
    s.attempt_index = r.example.attempt_index;
    subs.push_back(std::move(s));
  }
  out.corpus.streams = corpus::build_streams(std::move(subs), true);
  out.corpus.problems = problems;
  return out;
}

}  // namespace trajeval::genharness
