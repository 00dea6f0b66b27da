#include <random>

#include <gtest/gtest.h>

#include "support/taxonomy.hpp"
#include "trajeval/functional/functional.hpp"

using namespace trajeval;
using namespace trajeval::functional;

namespace {

corpus::ProblemSpec square_problem() {
  corpus::ProblemSpec p;
  p.problem_id = "square";
  p.doctests = {{"square(3)", "9"}, {"square(-2)", "4"}};
  return p;
}

}  // namespace

TEST(ErrorType, NamesRoundTrip) {
  for (auto t : kErrorTypes) EXPECT_EQ(parse_error_type(to_string(t)), t);
  EXPECT_THROW(parse_error_type("warning"), Error);
}

TEST(Execution, ExecutorAnswers) { EXPECT_NO_THROW(check_executor(taxonomy_executor())); }

TEST(Execution, MissingInterpreterIsInfrastructure) {
  auto cfg = taxonomy_executor();
  cfg.command = {"/nonexistent/python-for-tests"};
  EXPECT_THROW(check_executor(cfg), InfrastructureError);
}

TEST(Execution, CountsPassingDoctests) {
  auto r = classify_from_execution("def square(x):\n    return 9\n", square_problem(), taxonomy_executor());
  EXPECT_EQ(r.error_type, ErrorType::Logical);
  EXPECT_EQ(r.tests_passed, 1);
  EXPECT_EQ(r.tests_total, 2);
  EXPECT_DOUBLE_EQ(r.pass_fraction, 0.5);
  EXPECT_FALSE(r.full_pass);
}

TEST(Execution, UnparseableCodeNeverRuns) {
  auto cfg = taxonomy_executor();
  cfg.command = {"/nonexistent/python-for-tests"};  // would throw if launched
  auto r = classify_from_execution("def square(x)\n    return x\n", square_problem(), cfg);
  EXPECT_EQ(r.error_type, ErrorType::Compile);
  EXPECT_EQ(r.tests_passed, 0);
}

TEST(Execution, SandboxHasNoNetwork) {
  corpus::ProblemSpec p;
  p.doctests = {{"probe()", "'blocked'"}};
  std::string code =
      "import socket\n"
      "def probe():\n"
      "    try:\n"
      "        socket.create_connection(('127.0.0.1', 9))\n"
      "    except OSError as e:\n"
      "        return 'blocked' if 'disabled' in str(e) else 'refused'\n"
      "    return 'open'\n";
  EXPECT_EQ(classify_from_execution(code, p, taxonomy_executor()).error_type, ErrorType::NoError);
}

// The raw socket module bypasses the interpreter-level block; only the
// network namespace stops it. In a fresh namespace even loopback is down.
TEST(Execution, NamespaceCutsRawSockets) {
  auto cfg = taxonomy_executor();
  if (cfg.command.empty() || cfg.command[0] != "unshare") GTEST_SKIP() << "no network namespace available";
  corpus::ProblemSpec p;
  p.doctests = {{"probe()", "'unreachable'"}};
  std::string code =
      "import _socket\n"
      "def probe():\n"
      "    s = _socket.socket(_socket.AF_INET, _socket.SOCK_STREAM)\n"
      "    try:\n"
      "        s.connect(('10.255.255.1', 80))\n"
      "    except OSError:\n"
      "        return 'unreachable'\n"
      "    return 'open'\n";
  auto r = classify_from_execution(code, p, cfg);
  EXPECT_EQ(r.error_type, ErrorType::NoError) << r.executor_log;
}

TEST(Taxonomy, ExecutionMatchesHandLabels) {
  auto fixtures = load_taxonomy();
  ASSERT_EQ(fixtures.size(), 40u);
  std::vector<ExecutionJob> jobs;
  for (const auto& f : fixtures) jobs.push_back({&f.code, &f.problem});
  auto results = classify_all(jobs, taxonomy_executor());
  std::array<int, 4> per_label{};
  for (std::size_t i = 0; i < fixtures.size(); ++i) {
    SCOPED_TRACE(fixtures[i].name + "\n" + results[i].executor_log);
    EXPECT_EQ(results[i].error_type, fixtures[i].label);
    ++per_label[static_cast<int>(fixtures[i].label)];
  }
  for (int n : per_label) EXPECT_EQ(n, 10);
}

TEST(Taxonomy, GraderTextMatchesHandLabels) {
  for (const auto& f : load_taxonomy()) {
    SCOPED_TRACE(f.name + "\n" + f.grader_text);
    auto t = classify_from_grader_text(f.grader_text);
    ASSERT_TRUE(t.has_value());
    EXPECT_EQ(*t, f.label);
  }
}

TEST(GraderText, Signatures) {
  EXPECT_EQ(classify_from_grader_text("  File \"x.py\", line 1\nSyntaxError: invalid syntax\n"), ErrorType::Compile);
  EXPECT_EQ(classify_from_grader_text("IndentationError: unexpected indent"), ErrorType::Compile);
  EXPECT_EQ(classify_from_grader_text(">>> f()\n# Error: evaluation exceeded 10 seconds\n"), ErrorType::Runtime);
  EXPECT_EQ(classify_from_grader_text("Traceback (most recent call last):\nZeroDivisionError: x\n"), ErrorType::Runtime);
  EXPECT_EQ(classify_from_grader_text(">>> f()\n# Error: expected\n#     1\n# but got\n#     2\n"), ErrorType::Logical);
  // An expected traceback in the expectation block is not a crash.
  EXPECT_EQ(classify_from_grader_text(">>> f()\n# Error: expected\n#     Traceback (most recent call last):\n"
                                      "#     ValueError\n# but got\n#     3\n"),
            ErrorType::Logical);
  EXPECT_EQ(classify_from_grader_text("Test summary\n    3 test cases passed! No cases failed.\n"), ErrorType::NoError);
  EXPECT_EQ(classify_from_grader_text("something unrelated"), std::nullopt);
  EXPECT_EQ(classify_from_grader_text(""), std::nullopt);
}

TEST(Distribution, ProportionsAndWarnings) {
  std::vector<LabelledOutcome> outs = {{"a", ErrorType::NoError}, {"a", ErrorType::Runtime}, {"a", std::nullopt},
                                       {"b", std::nullopt}, {"c", ErrorType::Compile}};
  std::vector<std::string> warnings;
  auto d = error_distribution(outs, &warnings);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].group, "a");
  EXPECT_EQ(d[0].total, 2u);
  EXPECT_EQ(d[0].unknown, 1u);
  EXPECT_DOUBLE_EQ(d[0].proportions[0], 0.5);
  EXPECT_DOUBLE_EQ(d[0].proportions[2], 0.5);
  EXPECT_EQ(d[1].group, "c");
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("'b'"), std::string::npos);
}

TEST(Distribution, ProportionsSumToOne) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LabelledOutcome> outs;
    int n = std::uniform_int_distribution<int>(1, 40)(rng);
    for (int i = 0; i < n; ++i)
      outs.push_back({"g" + std::to_string(i % 3), static_cast<ErrorType>(std::uniform_int_distribution<int>(0, 3)(rng))});
    for (const auto& g : error_distribution(outs)) {
      double sum = 0.0;
      for (double p : g.proportions) sum += p;
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(PassRates, Means) {
  std::vector<FunctionalResult> rs(4);
  rs[0].full_pass = true;
  rs[0].pass_fraction = 1.0;
  rs[1].pass_fraction = 0.5;
  auto p = pass_rates(rs);
  EXPECT_EQ(p.n, 4u);
  EXPECT_DOUBLE_EQ(p.full_pass, 0.25);
  EXPECT_DOUBLE_EQ(p.pass_fraction, 0.375);
}
