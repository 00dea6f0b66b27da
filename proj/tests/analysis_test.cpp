#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "support/paths.hpp"
#include "trajeval/analysis/metrics.hpp"
#include "trajeval/analysis/style.hpp"
#include "trajeval/python/parser.hpp"

using namespace trajeval::analysis;
using nlohmann::json;

namespace {

json golden() { return json::parse(testing_paths::slurp(testing_paths::data("ast_golden.json"))); }

std::vector<std::string> codes_of(const ViolationReport& r) {
  std::vector<std::string> out;
  for (const auto& v : r) out.push_back(v.code);
  return out;
}

}  // namespace

TEST(Verbosity, CountsCodePointsAndLines) {
  EXPECT_EQ(verbosity("").char_count, 0);
  EXPECT_EQ(verbosity("").line_count, 0);
  EXPECT_EQ(verbosity("x = 1\n").line_count, 1);
  EXPECT_EQ(verbosity("x = 1").line_count, 1);
  EXPECT_EQ(verbosity("a\r\nb\r\n").line_count, 2);
  EXPECT_EQ(verbosity("a\r\nb\r\n").char_count, 4);
  EXPECT_EQ(verbosity("s = 'é'\n").char_count, 8);
}

TEST(AstGolden, MatchesFrozenShapes) {
  for (const auto& row : golden()) {
    std::string code = row["code"];
    SCOPED_TRACE(code);
    auto shape = ast_metrics(code);
    ASSERT_EQ(shape.has_value(), row["parse_ok"].get<bool>());
    if (!shape) continue;
    EXPECT_EQ(shape->nodes, row["nodes"].get<int>());
    EXPECT_EQ(shape->depth, row["depth"].get<int>());
    EXPECT_EQ(shape->width, row["width"].get<int>());
  }
}

TEST(StyleGolden, MatchesFrozenViolations) {
  for (const auto& row : golden()) {
    std::string code = row["code"];
    SCOPED_TRACE(code);
    EXPECT_EQ(codes_of(style_check(code)), row["violations"].get<std::vector<std::string>>());
    EXPECT_EQ(measure(code).violations, static_cast<int>(row["violations"].size()));
  }
}

TEST(Style, ReportsPositions) {
  auto r = style_check("xs = [1,2]\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].code, "E231");
  EXPECT_EQ(r[0].line, 1);
  EXPECT_EQ(r[0].col, 8);
}

TEST(Style, SurvivesUntokenizableCode) {
  EXPECT_NO_THROW(style_check("def f(\n    'unterminated\n\tx=1 \n"));
}

// Comments change verbosity but never the tree.
TEST(AstProperty, CommentInsertionKeepsShape) {
  std::mt19937 rng(7);
  for (const auto& row : golden()) {
    if (!row["parse_ok"].get<bool>()) continue;
    std::string code = row["code"];
    auto base = measure(code);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::string> lines;
      std::stringstream ss(code);
      for (std::string l; std::getline(ss, l);) lines.push_back(l);
      std::size_t at = std::uniform_int_distribution<std::size_t>(0, lines.size())(rng);
      std::string indent(std::uniform_int_distribution<int>(0, 8)(rng), ' ');
      lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at), indent + "# note " + std::to_string(trial));
      std::string edited;
      for (const auto& l : lines) edited += l + "\n";
      SCOPED_TRACE(edited);
      auto m = measure(edited);
      ASSERT_TRUE(m.parse_ok);
      EXPECT_EQ(m.ast_nodes, base.ast_nodes);
      EXPECT_EQ(m.ast_depth, base.ast_depth);
      EXPECT_EQ(m.ast_width, base.ast_width);
      EXPECT_NE(m.char_count, base.char_count);
    }
  }
}

TEST(Parser, RejectsBrokenCode) {
  for (const char* bad : {"def f(x)\n    return x\n", "x = (1\n", "if x:\ny = 1\n", "x = = 1\n", "return x +\n"}) {
    SCOPED_TRACE(bad);
    EXPECT_FALSE(ast_metrics(bad).has_value());
  }
}

TEST(Parser, AcceptsCommonConstructs) {
  for (const char* ok : {"x: int = 1\n", "async def f():\n    await g()\n", "f(*a, **k)\n", "x = [i for i in y if i]\n",
                         "match x:\n    case 1:\n        pass\n", "s = f'{a!r:>{w}}'\n", "del x[0], y\n",
                         "global g\n", "x = yield\n", "a = b = c\n", "with a as b, c as d:\n    pass\n"}) {
    SCOPED_TRACE(ok);
    EXPECT_TRUE(ast_metrics(ok).has_value());
  }
}

TEST(MetricsCsv, LeavesAstColumnsEmptyOnParseFailure) {
  std::ostringstream out;
  write_metrics_csv(out, {{"s1", "p1", 0, measure("x = (\n")}, {"s1", "p1", 1, measure("x = 1\n")}});
  std::string text = out.str();
  EXPECT_NE(text.find("s1,p1,0,"), std::string::npos);
  EXPECT_NE(text.find(",,,"), std::string::npos);
}
