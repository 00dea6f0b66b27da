#include "trajeval/analysis/metrics.hpp"

#include <algorithm>
#include <vector>

#include "trajeval/analysis/style.hpp"
#include "trajeval/python/parser.hpp"
#include "trajeval/util/text.hpp"

namespace trajeval::analysis {

Verbosity verbosity(std::string_view code) {
  std::string text = python::normalize_newlines(code);
  Verbosity v;
  v.char_count = static_cast<std::int64_t>(util::utf8_length(text));
  v.line_count = std::count(text.begin(), text.end(), '\n');
  if (!text.empty() && text.back() != '\n') ++v.line_count;
  return v;
}

std::optional<AstShape> ast_metrics(std::string_view code) {
  python::Tree tree;
  try {
    tree = python::parse_module(code);
  } catch (const python::SyntaxError&) {
    return std::nullopt;
  }
  AstShape shape;
  std::vector<const python::Node*> level{tree.root()};
  std::vector<const python::Node*> next;
  while (!level.empty()) {
    ++shape.depth;
    shape.width = std::max(shape.width, static_cast<int>(level.size()));
    shape.nodes += static_cast<int>(level.size());
    next.clear();
    for (const auto* n : level) next.insert(next.end(), n->children.begin(), n->children.end());
    level.swap(next);
  }
  return shape;
}

CodeMetrics measure(std::string_view code) {
  CodeMetrics m;
  Verbosity v = verbosity(code);
  m.char_count = v.char_count;
  m.line_count = v.line_count;
  if (auto shape = ast_metrics(code)) {
    m.parse_ok = true;
    m.ast_depth = shape->depth;
    m.ast_width = shape->width;
    m.ast_nodes = shape->nodes;
  }
  m.violations = static_cast<int>(style_check(code).size());
  return m;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "student_id,problem_id,attempt_index,char_count,line_count,ast_depth,ast_width,"
         "ast_nodes,violations,parse_ok\n";
  for (const auto& r : rows) {
    util::write_csv_field(out, r.student_id);
    out << ',';
    util::write_csv_field(out, r.problem_id);
    const CodeMetrics& m = r.metrics;
    out << ',' << r.attempt_index << ',' << m.char_count << ',' << m.line_count << ',';
    if (m.parse_ok) out << m.ast_depth << ',' << m.ast_width << ',' << m.ast_nodes << ',';
    else out << ",,,";
    out << m.violations << ',' << (m.parse_ok ? "true" : "false") << '\n';
  }
}

}  // namespace trajeval::analysis
