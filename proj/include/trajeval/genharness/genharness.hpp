#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajeval/corpus/corpus.hpp"
#include "trajeval/error.hpp"
#include "trajeval/streams/streams.hpp"

namespace trajeval::genharness {

/// Text with {{name}} substitutions, {{#name}}...{{/name}} sections rendered
/// when the value is non-empty and {{^name}}...{{/name}} when it is empty.
/// Known names: problem_statement, skeleton, stage, history, context.
struct PromptTemplate {
  std::string template_id;
  std::string system;  // role preamble, sent as the system message
  std::string body;
  std::string code_open = "<code>";
  std::string code_close = "</code>";

  /// A file holds the body; when a line consisting of "---" is present, the
  /// text above it is the system preamble.
  static PromptTemplate load(const std::filesystem::path& path);
  static PromptTemplate parse(std::string_view text, std::string template_id);

  /// Placeholder names referenced anywhere in the body.
  std::vector<std::string> placeholders() const;
};

PromptTemplate default_template();

/// Identifies the student attempt a prompt asks the model to stand in for.
struct ExampleRef {
  std::string student_id;
  std::string problem_id;
  std::string semester;
  int attempt_index = 0;
  std::int64_t timestamp_ms = 0;
  std::string stage;  // empty for high-resolution examples
  bool with_context = false;
};

struct Prompt {
  ExampleRef example;
  std::string template_id;
  std::string system;
  std::string user;
};

/// Deterministic rendering. History and context are oldest first and every
/// code snippet (skeleton included) is wrapped in the template delimiters.
/// Throws naming any placeholder the example needs but the template lacks.
Prompt build_prompt(const streams::LowResExample& example, const PromptTemplate& tmpl);
Prompt build_prompt(const streams::HighResExample& example, const PromptTemplate& tmpl);

struct SamplingParams {
  double temperature = 0.7;
  double top_p = 0.8;
  std::optional<int> top_k = 20;
  std::optional<double> min_p = 0.0;
  std::optional<int> max_tokens;
};

struct EndpointConfig {
  std::string url;  // chat-completion endpoint
  std::string model;
  std::string endpoint_id;  // defaults to model@url
  std::string api_key;      // bearer token; empty sends none
  std::chrono::milliseconds timeout{120000};
  int max_attempts = 4;
  std::chrono::milliseconds backoff{1000};  // doubled after each failure
  int concurrency = 4;
  double requests_per_second = 2.0;
  int burst = 4;
};

enum class RecordStatus { Ok, ExtractionFailed, Error };

std::string to_string(RecordStatus status);
RecordStatus parse_record_status(std::string_view text);

struct GenerationRecord {
  ExampleRef example;
  std::string template_id;
  std::string endpoint_id;
  SamplingParams sampling;
  std::string prompt_sha256;
  RecordStatus status = RecordStatus::Error;
  std::string raw_response;
  std::optional<std::string> code;
  std::string error;
  int attempts = 0;
  std::string created_at;  // UTC, ISO 8601
};

/// The endpoint refused our credentials. Aborts a generation run.
class AuthError : public Error {
 public:
  using Error::Error;
};

/// Body of the first <code>...</code> block, else the first fenced block.
/// nullopt when neither exists or the block is blank.
std::optional<std::string> extract_code(std::string_view response, const std::string& open = "<code>",
                                        const std::string& close = "</code>");

/// Request body sent for one prompt.
std::string request_body(const Prompt& prompt, const EndpointConfig& endpoint, const SamplingParams& sampling);

/// One record per prompt, in prompt order. Transient failures are retried with
/// exponential backoff; prompts that still fail get an error record.
std::vector<GenerationRecord> generate(const std::vector<Prompt>& prompts, const EndpointConfig& endpoint,
                                       const SamplingParams& sampling = {});

/// Blocking token bucket shared by request workers.
class TokenBucket {
 public:
  TokenBucket(double rate_per_second, int burst);
  void acquire();

 private:
  std::mutex mutex_;
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

std::string record_to_json(const GenerationRecord& record);
GenerationRecord record_from_json(const std::string& line);

/// Append-only JSONL ledger with a single writer.
class Ledger {
 public:
  explicit Ledger(std::filesystem::path path);
  void append(const GenerationRecord& record);
  static std::vector<GenerationRecord> read(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

struct CandidateBuild {
  corpus::Corpus corpus;
  std::size_t excluded = 0;    // records without usable code
  std::size_t duplicates = 0;  // later records for an example already seen
  std::vector<std::string> warnings;
};

/// Candidate submissions mirror their targets' keys and attempt indices so
/// they pair 1:1 with student submissions.
CandidateBuild records_to_corpus(const std::vector<GenerationRecord>& records,
                                 const std::map<std::string, corpus::ProblemSpec>& problems = {});

}  // namespace trajeval::genharness
