#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace trajeval::analysis {

struct Verbosity {
  std::int64_t char_count = 0;
  std::int64_t line_count = 0;
};

struct AstShape {
  int depth = 0;
  int width = 0;
  int nodes = 0;
};

struct CodeMetrics {
  std::int64_t char_count = 0;
  std::int64_t line_count = 0;
  // Meaningful only when parse_ok.
  int ast_depth = 0;
  int ast_width = 0;
  int ast_nodes = 0;
  int violations = 0;
  bool parse_ok = false;
};

/// Characters are code points; CRLF counts as a single newline. A trailing
/// newline does not start another line.
Verbosity verbosity(std::string_view code);

/// Tree shape of the module, or nullopt when the code does not parse.
std::optional<AstShape> ast_metrics(std::string_view code);

CodeMetrics measure(std::string_view code);

struct MetricsRow {
  std::string student_id;
  std::string problem_id;
  int attempt_index = 0;
  CodeMetrics metrics;
};

/// Writes the per-submission CSV (header included). AST columns are left
/// empty for code that does not parse.
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

}  // namespace trajeval::analysis
