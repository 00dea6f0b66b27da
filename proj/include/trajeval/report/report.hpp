#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajeval/embedding/embedding.hpp"
#include "trajeval/error.hpp"
#include "trajeval/functional/functional.hpp"
#include "trajeval/stats/stats.hpp"

namespace trajeval::report {

enum class Experiment { LowRes, HighRes };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& text);

struct CandidateConfig {
  std::string name;
  Experiment experiment = Experiment::LowRes;
  bool context = false;
  std::string corpus;  // as written in the config file
};

struct EvalConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this

  std::string reference_corpus;
  std::string problems;
  std::string manifest;  // empty: every reference stream
  bool dedup_consecutive = false;
  double max_malformed_fraction = 0.01;
  std::vector<CandidateConfig> candidates;

  struct {
    bool enabled = true;
    std::string provider = "precomputed";  // precomputed | http
    std::string file;                      // precomputed vectors
    std::string url;
    std::string provider_id;
    std::string token_env;  // environment variable holding the bearer token
    std::size_t dim = 0;
    std::size_t batch = 32;
    std::string cache_dir;
    embedding::Distance distance = embedding::Distance::Cosine;
    embedding::CoverageDirection coverage_direction = embedding::CoverageDirection::GeneratedToStudents;
    int k_distance = 3;
    int k_coverage = 10;
    bool projection = true;
  } embedding;

  struct {
    bool enabled = true;
    // "execute" runs every submission; "grader_text" labels student
    // submissions from their recorded grader output when present.
    std::string student_source = "execute";
    functional::ExecutorConfig executor = functional::default_executor_config();
  } functional;

  struct {
    bool enabled = true;
  } style;

  struct {
    bool enabled = true;
    int bins = 10;
  } progress;

  /// Parses a JSON config document. Unknown keys are an error.
  static EvalConfig parse(const std::string& json_text, const std::filesystem::path& base_dir);
  static EvalConfig load(const std::filesystem::path& path);

  std::filesystem::path resolve(const std::string& p) const;

  /// The settings that can change a metric value, as canonical JSON.
  /// Execution plumbing (worker counts, interpreter paths, caches) is left
  /// out so the digest is stable across machines.
  std::string semantic_json() const;
  std::string digest() const;
};

// ---- report model ------------------------------------------------------------

struct MaeCell {
  double value = 0.0;
  std::size_t pairs = 0;
  std::size_t skipped = 0;
};

struct Table1Row {
  std::string model;
  std::string stage;
  bool context = false;
  double knn_distance = 0.0;
  double knn_coverage = 0.0;  // fraction
  std::size_t n_students = 0;
  std::size_t n_generated = 0;
};

/// Student rows have no context and no MAE.
struct Table2Row {
  std::string model;
  std::string stage;
  std::optional<bool> context;
  stats::Summary violations;
  std::optional<MaeCell> violations_mae;
  stats::Summary style;
  std::optional<MaeCell> style_mae;
};

struct Table3Row {
  std::string model;
  std::optional<bool> context;
  stats::Summary pass_rate;  // of the full-pass indicator, as a fraction
  std::optional<MaeCell> pass_rate_mae;
  stats::Summary violations;
  std::optional<MaeCell> violations_mae;
  stats::Summary style;
  std::optional<MaeCell> style_mae;
  std::optional<MaeCell> cosine_distance;  // mean over matched pairs
};

struct ErrorDistRow {
  std::string population;
  std::string stage;  // empty when not split by stage
  std::optional<bool> context;
  functional::ErrorDistribution dist;
};

struct ProgressRow {
  std::string population;
  std::optional<bool> context;
  stats::ProgressCurve curve;
};

struct ProjectionPoint {
  std::string key;
  std::string population;
  double x = 0.0;
  double y = 0.0;
};

struct ProjectionBlock {
  std::string stage;  // empty for a pooled projection
  std::array<double, 2> explained{};
  std::vector<ProjectionPoint> points;
};

struct Exclusion {
  std::string population;
  std::string metric;
  std::string reason;
  std::size_t count = 0;
};

struct CorpusDigest {
  std::string name;
  std::string experiment;  // empty for the reference
  std::optional<bool> context;
  std::string sha256;
  std::size_t submissions = 0;
};

struct Metadata {
  std::string tool_version;
  std::string split;
  std::vector<CorpusDigest> corpora;
  std::string config_digest;
  std::optional<stats::StyleScoreModel> style_model;
  std::map<std::string, std::string> settings;         // metric parameters in effect
  std::map<std::string, std::string> interpretations;  // readings of ambiguous definitions
  std::vector<std::string> notices;                    // omitted sections, warnings
  std::vector<Exclusion> exclusions;
};

struct Report {
  Metadata meta;
  std::optional<std::vector<Table1Row>> table1;
  std::optional<std::vector<Table2Row>> table2;
  std::optional<std::vector<Table3Row>> table3;
  std::optional<std::vector<ErrorDistRow>> error_distributions;
  std::optional<std::vector<ProgressRow>> progress;
  std::optional<std::vector<ProjectionBlock>> embed2d;
};

/// Runs every configured pipeline. Sections whose inputs are unavailable are
/// omitted with a notice; a candidate that does not line up with the
/// reference targets is an error.
Report run_evaluation(const EvalConfig& config);

// ---- rendering ---------------------------------------------------------------

/// Pretty JSON including a "digest" field.
std::string to_json(const Report& report);

/// SHA-256 over the canonical JSON form (sorted keys, numbers rounded to 10
/// significant digits, digest field excluded).
std::string digest(const Report& report);

std::string to_markdown(const Report& report);

/// Writes table1.csv, table2.csv, table3.csv, err_dist.csv, embed2d.csv
/// (+ embed2d_variance.json) and one progress_<metric>.csv per metric.
/// Returns the file names written, sorted.
std::vector<std::string> write_csv_bundle(const Report& report, const std::filesystem::path& dir);

enum class Format { Json, CsvBundle, Markdown };
Format parse_format(const std::string& text);

/// Writes report.json, the CSV bundle, or report.md into `dir`.
std::vector<std::string> render(const Report& report, Format format, const std::filesystem::path& dir);

/// Rebuilds a report from its JSON form (as written by to_json).
Report from_json(const std::string& text);

// ---- number formats ------------------------------------------------------------

std::string fmt_fixed(double value, int decimals);
std::string fmt_distance(double value);             // 0.054
std::string fmt_percent(double fraction);           // 77.8%
std::string fmt_mean_std(const stats::Summary& s);  // 7.49 (4.69)
std::string fmt_pass_rate(const stats::Summary& s);  // 9.8 (0.28): mean in percent, std as a fraction

}  // namespace trajeval::report
