// Prints AST shape and style findings for a JSON list of sources, in the
// same layout as tests/oracle/ast_oracle.py, for differential checks.
#include <iostream>

#include <json.hpp>

#include "trajeval/analysis/metrics.hpp"
#include "trajeval/analysis/style.hpp"

int main() {
  using namespace trajeval::analysis;
  nlohmann::json in = nlohmann::json::parse(std::cin);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& src : in) {
    std::string code = src.get<std::string>();
    nlohmann::json row;
    auto shape = ast_metrics(code);
    row["parse_ok"] = shape.has_value();
    if (shape) {
      row["nodes"] = shape->nodes;
      row["depth"] = shape->depth;
      row["width"] = shape->width;
    }
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : style_check(code)) v.push_back({x.code, x.line, x.col});
    row["violations"] = v;
    out.push_back(row);
  }
  std::cout << out.dump() << '\n';
}
