#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "support/paths.hpp"
#include "support/snapshot_report.hpp"
#include "trajeval/corpus/corpus.hpp"
#include "trajeval/report/report.hpp"

using namespace trajeval;
using namespace trajeval::report;
using nlohmann::json;

namespace {

// Frozen digest of the synthetic evaluation.
constexpr const char* kGoldenDigest = "6843b90c4e3dcab7d5cb2807978e42aa854cc50addf033686ab3a4f0ff7cab4a";

std::filesystem::path synthetic_dir() { return testing_paths::data("synthetic"); }

json base_config() { return json::parse(testing_paths::slurp(synthetic_dir() / "eval_config.json")); }

EvalConfig config_from(const json& j) { return EvalConfig::parse(j.dump(), synthetic_dir()); }

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("trajeval_report_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

class Golden : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { golden_ = new Report(run_evaluation(EvalConfig::load(synthetic_dir() / "eval_config.json"))); }
  static void TearDownTestSuite() {
    delete golden_;
    golden_ = nullptr;
  }
  static Report* golden_;
};
Report* Golden::golden_ = nullptr;

bool has_notice(const Report& r, const std::string& prefix) {
  for (const auto& n : r.meta.notices)
    if (n.rfind(prefix, 0) == 0) return true;
  return false;
}

}  // namespace

TEST(Config, RejectsUnknownKeysAndReservedNames) {
  EXPECT_THROW(EvalConfig::parse(R"({"reference": {"corpus": "a"}, "extra": 1})", "."), Error);
  EXPECT_THROW(EvalConfig::parse(R"({"reference": {"corpus": "a", "typo": 1}})", "."), Error);
  EXPECT_THROW(EvalConfig::parse(R"({"reference": {}})", "."), Error);
  EXPECT_THROW(
      EvalConfig::parse(R"({"reference": {"corpus": "a"}, "candidates": [{"name": "Student", "corpus": "c"}]})", "."),
      Error);
  EXPECT_THROW(EvalConfig::parse(R"({"reference": {"corpus": "a"}, "embedding": {"k_distance": 0}})", "."), Error);
  EXPECT_THROW(EvalConfig::parse(R"({"reference": {"corpus": "a"}, "embedding": {"distance": "l1"}})", "."), Error);
  EXPECT_THROW(EvalConfig::parse("not json", "."), Error);
}

TEST(Config, DigestIgnoresExecutionPlumbing) {
  json a = base_config();
  json b = base_config();
  b["functional"]["max_workers"] = 7;
  b["functional"]["executor_cmd"] = "python3 -I sandbox.py";
  b["embedding"]["cache_dir"] = "/tmp/elsewhere";
  EXPECT_EQ(config_from(a).digest(), config_from(b).digest());
  b["embedding"]["k_distance"] = 5;
  EXPECT_NE(config_from(a).digest(), config_from(b).digest());
  EXPECT_EQ(config_from(a).resolve("x.jsonl"), synthetic_dir() / "x.jsonl");
}

TEST(Format, NumberCells) {
  EXPECT_EQ(fmt_distance(0.054), "0.054");
  EXPECT_EQ(fmt_percent(0.778), "77.8%");
  EXPECT_EQ(fmt_mean_std({5, 7.49, 4.69}), "7.49 (4.69)");
  EXPECT_EQ(fmt_pass_rate({5, 0.098, 0.28}), "9.8 (0.28)");
  EXPECT_EQ(fmt_mean_std({0, 0, 0}), "--");
  EXPECT_EQ(fmt_fixed(-0.0001, 2), "0.00");
  EXPECT_EQ(fmt_fixed(std::nan(""), 2), "nan");
}

TEST(Format, MarkdownTablesMatchSnapshots) {
  std::string md = to_markdown(snapshot::layout_report());
  for (auto [title, file] : {std::pair{"KNN distance and coverage", "table1.md"}, {"Style by stage", "table2.md"},
                             {"Next-attempt generation", "table3.md"}}) {
    EXPECT_EQ(snapshot::section(md, title), testing_paths::slurp(testing_paths::data("snapshots/") / file)) << file;
  }
  EXPECT_NE(md.find("| qwen-student | first | F | 0.054 | 77.8% |"), std::string::npos);
}

TEST(Format, CsvBundleAndParse) {
  auto dir = scratch("csv");
  auto files = write_csv_bundle(snapshot::layout_report(), dir);
  // The file set is fixed; absent sections leave header-only files.
  EXPECT_EQ(files, (std::vector<std::string>{"embed2d.csv", "embed2d_variance.json", "err_dist.csv", "table1.csv",
                                             "table2.csv", "table3.csv"}));
  std::string t1 = testing_paths::slurp(dir / "table1.csv");
  EXPECT_EQ(t1.substr(0, t1.find('\n')), "model,stage,context,knn_distance,knn_coverage,n_students,n_generated");
  EXPECT_NE(t1.find("qwen-student,first,F,0.054"), std::string::npos);
  std::string err = testing_paths::slurp(dir / "err_dist.csv");
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);
  EXPECT_EQ(parse_format("markdown"), Format::Markdown);
  EXPECT_EQ(parse_format("csv"), Format::CsvBundle);
  EXPECT_THROW(parse_format("xml"), Error);
}

TEST_F(Golden, DigestIsFrozenAndRepeatable) {
  EXPECT_EQ(digest(*golden_), kGoldenDigest);
  Report again = run_evaluation(EvalConfig::load(synthetic_dir() / "eval_config.json"));
  EXPECT_EQ(to_json(again), to_json(*golden_));
}

TEST_F(Golden, HasEverySection) {
  const Report& r = *golden_;
  ASSERT_TRUE(r.table1 && r.table2 && r.table3 && r.error_distributions && r.progress && r.embed2d);
  EXPECT_TRUE(r.meta.notices.empty());
  EXPECT_EQ(r.meta.split, "test_NS_OP");
  // 3 stages x 3 low-res candidates.
  EXPECT_EQ(r.table1->size(), 9u);
  for (const auto& row : *r.table1) {
    EXPECT_GE(row.knn_coverage, 0.0);
    EXPECT_LE(row.knn_coverage, 1.0);
  }
  // Table 3: three high-res candidates then the students.
  ASSERT_EQ(r.table3->size(), 4u);
  EXPECT_EQ(r.table3->back().model, "Student");
  EXPECT_FALSE(r.table3->back().pass_rate_mae.has_value());
  EXPECT_TRUE(r.meta.style_model.has_value());
  for (const auto& row : *r.error_distributions) {
    double s = 0;
    for (double p : row.dist.proportions) s += p;
    if (row.dist.total > 0) EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST_F(Golden, JsonRoundTrip) {
  std::string text = to_json(*golden_);
  Report back = from_json(text);
  EXPECT_EQ(digest(back), digest(*golden_));
  EXPECT_EQ(to_json(back), text);
  EXPECT_EQ(to_markdown(back), to_markdown(*golden_));

  json j = json::parse(text);
  j["table1"][0]["knn_distance"] = 0.5;
  EXPECT_THROW(from_json(j.dump()), Error);
}

TEST_F(Golden, DisablingEmbeddingsLeavesOtherMetricsAlone) {
  json c = base_config();
  c["embedding"]["enabled"] = false;
  Report r = run_evaluation(config_from(c));
  EXPECT_FALSE(r.table1.has_value());
  EXPECT_FALSE(r.embed2d.has_value());
  EXPECT_TRUE(has_notice(r, "embedding: disabled"));
  ASSERT_TRUE(r.table2 && r.error_distributions && r.progress);
  Report g = *golden_;
  Report copy = r;
  g.table1.reset();
  g.embed2d.reset();
  // Table 3's cosine column is the only other embedding consumer.
  for (auto& row : *g.table3) row.cosine_distance.reset();
  copy.meta = g.meta;
  EXPECT_EQ(to_json(copy), to_json(g));
}

TEST_F(Golden, DisablingExecutionLeavesOtherMetricsAlone) {
  json c = base_config();
  c["functional"]["enabled"] = false;
  Report r = run_evaluation(config_from(c));
  EXPECT_TRUE(has_notice(r, "functional: disabled"));
  EXPECT_FALSE(r.error_distributions.has_value());
  ASSERT_TRUE(r.table1 && r.table2);
  EXPECT_EQ(to_json(Report{golden_->meta, r.table1, r.table2, {}, {}, {}, r.embed2d}),
            to_json(Report{golden_->meta, golden_->table1, golden_->table2, {}, {}, {}, golden_->embed2d}));
}

TEST_F(Golden, GraderTextAgreesWithExecution) {
  json c = base_config();
  c["functional"]["student_source"] = "grader_text";
  // Student rows are split by the low-res stages, so keep those candidates.
  json low = json::array();
  for (const auto& cand : c["candidates"])
    if (cand["experiment"] == "low_res") low.push_back(cand);
  c["candidates"] = low;
  c["embedding"]["enabled"] = false;
  Report r = run_evaluation(config_from(c));
  ASSERT_TRUE(r.error_distributions.has_value());
  std::size_t compared = 0;
  for (const auto& row : *r.error_distributions) {
    if (row.population != "Student") continue;
    for (const auto& g : *golden_->error_distributions) {
      if (g.population != "Student" || g.stage != row.stage) continue;
      EXPECT_EQ(g.dist.counts, row.dist.counts) << row.stage;
      ++compared;
    }
  }
  EXPECT_GT(compared, 0u);
}

TEST(Evaluation, MisalignedCandidateIsAnError) {
  auto dir = scratch("misaligned");
  auto loaded = corpus::load_corpus(synthetic_dir() / "cand_mimic_low_F.jsonl");
  // Drop one stream's submissions so a reference target has no candidate.
  loaded.corpus.streams.erase(loaded.corpus.streams.begin());
  {
    std::ofstream out(dir / "short.jsonl", std::ios::binary);
    corpus::write_corpus(out, loaded.corpus);
  }
  json c = base_config();
  c["candidates"] = json::array({{{"name", "mimic"}, {"experiment", "low_res"}, {"context", false},
                                  {"corpus", (dir / "short.jsonl").string()}}});
  c["functional"]["enabled"] = false;
  EXPECT_THROW(run_evaluation(config_from(c)), Error);
}

TEST(Evaluation, MissingEmbeddingFileOmitsOnlyThoseSections) {
  json c = base_config();
  c["embedding"]["file"] = "does_not_exist.jsonl";
  c["functional"]["enabled"] = false;
  Report r = run_evaluation(config_from(c));
  EXPECT_FALSE(r.table1.has_value());
  EXPECT_TRUE(r.table2.has_value());
  bool found = false;
  for (const auto& n : r.meta.notices) found |= n.find("omitted") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(Cli, RenderReproducesMarkdown) {
  auto dir = scratch("cli");
  Report r = snapshot::layout_report();
  render(r, Format::Json, dir);
  std::string cmd = std::string(TRAJEVAL_CLI) + " render " + (dir / "report.json").string() + " -o " +
                    (dir / "md").string() + " --format md > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(testing_paths::slurp(dir / "md" / "report.md"), to_markdown(r));
}
