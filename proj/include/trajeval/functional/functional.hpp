#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajeval/corpus/corpus.hpp"
#include "trajeval/error.hpp"

namespace trajeval::functional {

/// Declared in increasing severity.
enum class ErrorType { NoError = 0, Logical = 1, Runtime = 2, Compile = 3 };

inline constexpr std::array<ErrorType, 4> kErrorTypes = {ErrorType::NoError, ErrorType::Logical,
                                                         ErrorType::Runtime, ErrorType::Compile};

std::string_view to_string(ErrorType type);
ErrorType parse_error_type(std::string_view text);

struct FunctionalResult {
  ErrorType error_type = ErrorType::Compile;
  int tests_passed = 0;
  int tests_total = 0;
  double pass_fraction = 0.0;
  bool full_pass = false;
  std::string executor_log;
};

/// The sandbox could not be run at all. Never recorded as a code outcome.
class InfrastructureError : public Error {
 public:
  using Error::Error;
};

struct ExecutorConfig {
  std::vector<std::string> command;  // launched once per submission
  double test_timeout_s = 5.0;
  int memory_mb = 512;
  std::filesystem::path work_root = std::filesystem::temp_directory_path();
  int max_workers = 4;
};

/// `python3` running the bundled doctest sandbox script.
ExecutorConfig default_executor_config();

/// Runs the sandbox on a trivial request; throws InfrastructureError when it
/// does not answer with a well-formed result.
void check_executor(const ExecutorConfig& cfg);

/// Compile failure (including any failure before the first doctest runs)
/// gives compile; an exception or timeout in any doctest gives runtime; a
/// wrong value with everything executing gives logical.
FunctionalResult classify_from_execution(const std::string& code, const corpus::ProblemSpec& problem,
                                         const ExecutorConfig& cfg);

struct ExecutionJob {
  const std::string* code = nullptr;
  const corpus::ProblemSpec* problem = nullptr;
};

/// Runs jobs on up to cfg.max_workers sandboxes; results are in job order.
std::vector<FunctionalResult> classify_all(const std::vector<ExecutionJob>& jobs, const ExecutorConfig& cfg);

/// Maps recorded autograder output onto the taxonomy; nullopt when no known
/// signature matches.
std::optional<ErrorType> classify_from_grader_text(std::string_view grader_output);

struct ErrorDistribution {
  std::string group;
  std::array<std::size_t, 4> counts{};  // indexed by ErrorType
  std::size_t total = 0;
  std::size_t unknown = 0;  // excluded from proportions
  std::array<double, 4> proportions{};
};

struct LabelledOutcome {
  std::string group;
  std::optional<ErrorType> type;
};

/// Per-group proportions in order of first appearance. Groups with no known
/// outcome are dropped and reported in `warnings`.
std::vector<ErrorDistribution> error_distribution(const std::vector<LabelledOutcome>& outcomes,
                                                  std::vector<std::string>* warnings = nullptr);

struct PassRates {
  std::size_t n = 0;
  double full_pass = 0.0;      // mean of the all-tests-pass indicator
  double pass_fraction = 0.0;  // mean fraction of doctests passed
};

PassRates pass_rates(const std::vector<FunctionalResult>& results);

}  // namespace trajeval::functional
