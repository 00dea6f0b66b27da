#pragma once

// A hand-built report with fixed reference cell values, used only to check
// the markdown layout.

#include <string>

#include "trajeval/report/report.hpp"

namespace snapshot {

inline trajeval::stats::Summary sum(double mean, double std) { return {10, mean, std}; }
inline trajeval::report::MaeCell mae(double v) { return {v, 10, 0}; }

inline trajeval::report::Report layout_report() {
  using namespace trajeval::report;
  Report r;
  r.meta.tool_version = "0.0.0";
  r.meta.split = "test_NS_OP";
  r.table1 = std::vector<Table1Row>{
      {"gpt-4.1", "first", false, 0.083, 0.400, 45, 45},
      {"qwen-inst", "first", false, 0.080, 0.444, 45, 45},
      {"qwen-student", "first", false, 0.054, 0.778, 45, 45},
      {"qwen-student", "middle", true, 0.060, 0.711, 45, 45},
  };
  r.table2 = std::vector<Table2Row>{
      {"gpt-4.1", "last", false, sum(5.84, 1.67), mae(4.49), sum(-0.96, 0.56), mae(1.85)},
      {"qwen-inst", "last", false, sum(5.00, 0.00), mae(4.13), sum(-0.64, 1.48), mae(2.07)},
      {"qwen-student", "last", false, sum(6.22, 2.08), mae(3.80), sum(0.41, 0.75), mae(1.26)},
      {"Student", "last", std::nullopt, sum(7.49, 4.69), std::nullopt, sum(0.89, 1.28), std::nullopt},
  };
  r.table3 = std::vector<Table3Row>{
      {"gpt-4.1", false, sum(0.967, 1.79), mae(0.87), sum(7.00, 3.18), mae(3.50), sum(-0.04, 1.30), mae(1.44),
       mae(0.10)},
      {"qwen-student", false, sum(0.105, 0.29), mae(0.11), sum(7.00, 3.57), mae(1.12), sum(0.70, 1.69), mae(0.02),
       mae(0.02)},
      {"Student", std::nullopt, sum(0.098, 0.28), std::nullopt, sum(6.92, 3.65), std::nullopt, sum(0.64, 1.65),
       std::nullopt, std::nullopt},
  };
  return r;
}

// The "## title" section of a markdown document, through its trailing blank
// line.
inline std::string section(const std::string& md, const std::string& title) {
  std::string head = "## " + title + "\n";
  std::size_t a = md.find(head);
  if (a == std::string::npos) return {};
  std::size_t b = md.find("\n## ", a + head.size());
  return md.substr(a, b == std::string::npos ? std::string::npos : b + 1 - a);
}

}  // namespace snapshot
