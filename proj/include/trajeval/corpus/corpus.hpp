#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "trajeval/error.hpp"

namespace trajeval::corpus {

inline constexpr const char* kSchemaVersion = "trajectory-corpus/1";

struct Submission {
  std::string student_id;
  std::string problem_id;
  std::string semester;
  std::int64_t timestamp_ms = 0;
  std::string code;
  std::optional<std::string> grader_output;
  int attempt_index = 0;
};

/// Identifies a stream: one student's work on one problem.
struct StreamKey {
  std::string student_id;
  std::string problem_id;

  auto operator<=>(const StreamKey&) const = default;
  bool operator==(const StreamKey&) const = default;
};

struct Stream {
  std::string student_id;
  std::string problem_id;
  std::string semester;  // semester of the first attempt
  std::vector<Submission> submissions;
  // True when attempt indices came from the file rather than from ordering
  // (candidate corpora mirror the indices of the student targets).
  bool explicit_attempt_index = false;

  StreamKey key() const { return {student_id, problem_id}; }
  std::size_t size() const { return submissions.size(); }
};

struct Doctest {
  std::string input;
  std::string expected;
};

struct ProblemSpec {
  std::string problem_id;
  std::string statement;
  std::string skeleton_code;
  std::vector<Doctest> doctests;
};

/// Immutable after loading. Streams are kept sorted by key.
struct Corpus {
  std::vector<Stream> streams;
  std::map<std::string, ProblemSpec> problems;

  const Stream* find(const StreamKey& key) const;
  const ProblemSpec* problem(const std::string& problem_id) const;
  std::size_t submission_count() const;
};

struct MalformedLine {
  std::size_t line_number = 0;  // 1-based, counting the header
  std::string reason;
};

struct LoadOptions {
  std::string schema_version = kSchemaVersion;
  // Loading fails when malformed records exceed this fraction of all records.
  double max_malformed_fraction = 0.01;
  bool dedup_consecutive = false;
};

struct LoadResult {
  Corpus corpus;
  std::vector<MalformedLine> malformed;
  std::size_t records = 0;
  std::size_t dedup_dropped = 0;
};

LoadResult load_corpus(std::istream& in, const LoadOptions& options = {});
LoadResult load_corpus(const std::filesystem::path& path, const LoadOptions& options = {});

/// Writes the header and one record per submission, streams in key order and
/// submissions in attempt order.
void write_corpus(std::ostream& out, const Corpus& corpus);

/// Groups submissions into streams, orders them by (timestamp, input order)
/// and assigns attempt indices. Submissions that already carry explicit
/// indices are ordered by them instead.
std::vector<Stream> build_streams(std::vector<Submission> submissions, bool explicit_indices = false,
                                  bool dedup_consecutive = false, std::size_t* dropped = nullptr);

/// A problem file holds one problem object or an array of them; a directory
/// is scanned for *.json files in name order.
std::vector<ProblemSpec> load_problems(const std::filesystem::path& path);

// ---- splits ----------------------------------------------------------------

enum class SplitName { Train, TestNsOp, TestNsNp, Custom };

std::string to_string(SplitName name);
SplitName parse_split_name(const std::string& text);

struct ManifestKey {
  std::string student_id;
  std::string problem_id;
  std::string semester;

  auto operator<=>(const ManifestKey&) const = default;
  bool operator==(const ManifestKey&) const = default;
};

struct SplitManifest {
  SplitName name = SplitName::Custom;
  std::vector<ManifestKey> keys;
};

SplitManifest load_manifest(const std::filesystem::path& path);
SplitManifest parse_manifest(const std::string& json_text);
std::string manifest_to_json(const SplitManifest& manifest);

/// Streams named by the manifest, in key order. Throws listing every key
/// that does not resolve.
Corpus build_split(const Corpus& corpus, const SplitManifest& manifest);

/// Throws when the two manifests share a key.
void check_disjoint(const SplitManifest& a, const SplitManifest& b);

// ---- statistics --------------------------------------------------------------

struct CorpusStats {
  std::size_t students = 0;
  std::size_t problems = 0;
  std::size_t streams = 0;
  std::size_t submissions = 0;

  bool operator==(const CorpusStats&) const = default;
};

CorpusStats corpus_stats(const Corpus& corpus);

/// "students / problems / submissions" with thousands separators.
std::string format_stats(const CorpusStats& stats);

/// 689023 -> "689,023".
std::string group_thousands(std::size_t value);

}  // namespace trajeval::corpus
