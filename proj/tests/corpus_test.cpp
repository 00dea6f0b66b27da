#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "support/paths.hpp"
#include "trajeval/corpus/corpus.hpp"

using namespace trajeval;
using namespace trajeval::corpus;

namespace {

std::string header() { return "{\"schema\":\"trajectory-corpus/1\"}\n"; }

std::string record(const std::string& s, const std::string& p, long long ts, const std::string& code,
                   const std::string& sem = "fa23") {
  return "{\"student_id\":\"" + s + "\",\"problem_id\":\"" + p + "\",\"semester\":\"" + sem +
         "\",\"timestamp_ms\":" + std::to_string(ts) + ",\"code\":\"" + code + "\"}\n";
}

LoadResult load(const std::string& text, LoadOptions opts = {}) {
  std::istringstream in(text);
  return load_corpus(in, opts);
}

}  // namespace

TEST(LoadCorpus, SortsOutOfOrderRecords) {
  auto r = load(header() + record("s1", "p1", 300, "c") + record("s1", "p1", 100, "a") + record("s1", "p1", 200, "b"));
  ASSERT_EQ(r.corpus.streams.size(), 1u);
  const auto& subs = r.corpus.streams[0].submissions;
  ASSERT_EQ(subs.size(), 3u);
  EXPECT_EQ(subs[0].code, "a");
  EXPECT_EQ(subs[2].code, "c");
  for (int i = 0; i < 3; ++i) EXPECT_EQ(subs[i].attempt_index, i);
}

TEST(LoadCorpus, EmptyFileGivesEmptyCorpus) {
  auto r = load("");
  EXPECT_TRUE(r.corpus.streams.empty());
  EXPECT_EQ(corpus_stats(r.corpus), (CorpusStats{0, 0, 0, 0}));
}

TEST(LoadCorpus, TwoByTwoByTwo) {
  std::string text = header();
  for (auto s : {"s1", "s2"})
    for (auto p : {"p1", "p2"})
      for (int a = 0; a < 2; ++a) text += record(s, p, 1000 + a, "x" + std::to_string(a));
  auto r = load(text);
  EXPECT_EQ(r.corpus.streams.size(), 4u);
  for (const auto& s : r.corpus.streams) EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(corpus_stats(r.corpus), (CorpusStats{2, 2, 4, 8}));
}

TEST(LoadCorpus, TimestampTiesKeepFileOrder) {
  auto r = load(header() + record("s", "p", 5, "first") + record("s", "p", 5, "second"));
  EXPECT_EQ(r.corpus.streams[0].submissions[0].code, "first");
  EXPECT_EQ(r.corpus.streams[0].submissions[1].code, "second");
}

TEST(LoadCorpus, SchemaMismatchIsAnError) {
  EXPECT_THROW(load("{\"schema\":\"trajectory-corpus/9\"}\n" + record("s", "p", 1, "x")), Error);
}

TEST(LoadCorpus, CollectsMalformedLinesUpToTheLimit) {
  std::string text = header();
  for (int i = 0; i < 99; ++i) text += record("s", "p", i, "x" + std::to_string(i));
  text += "{not json\n";
  LoadOptions opts;
  opts.max_malformed_fraction = 0.05;
  auto r = load(text, opts);
  ASSERT_EQ(r.malformed.size(), 1u);
  EXPECT_EQ(r.malformed[0].line_number, 101u);
  opts.max_malformed_fraction = 0.0;
  EXPECT_THROW(load(text, opts), Error);
}

TEST(LoadCorpus, RejectsEmailFieldAndEmptyCode) {
  LoadOptions strict;
  strict.max_malformed_fraction = 0.0;
  EXPECT_THROW(load(header() + "{\"student_id\":\"s\",\"problem_id\":\"p\",\"semester\":\"f\",\"timestamp_ms\":1,"
                               "\"code\":\"x\",\"email\":\"a@b\"}\n",
                    strict),
               Error);
  EXPECT_THROW(load(header() + record("s", "p", 1, "  \\n"), strict), Error);
}

TEST(LoadCorpus, DedupConsecutiveIsOptIn) {
  std::string text = header() + record("s", "p", 1, "a") + record("s", "p", 2, "a") + record("s", "p", 3, "b") +
                     record("s", "p", 4, "a");
  EXPECT_EQ(load(text).corpus.streams[0].size(), 4u);
  LoadOptions opts;
  opts.dedup_consecutive = true;
  auto r = load(text, opts);
  EXPECT_EQ(r.corpus.streams[0].size(), 3u);
  EXPECT_EQ(r.dedup_dropped, 1u);
}

TEST(LoadCorpus, ExplicitAttemptIndicesAreKept) {
  std::string text = header() +
                     "{\"student_id\":\"s\",\"problem_id\":\"p\",\"semester\":\"f\",\"timestamp_ms\":9,\"code\":\"b\","
                     "\"attempt_index\":4}\n"
                     "{\"student_id\":\"s\",\"problem_id\":\"p\",\"semester\":\"f\",\"timestamp_ms\":1,\"code\":\"a\","
                     "\"attempt_index\":2}\n";
  auto r = load(text);
  const auto& s = r.corpus.streams[0];
  EXPECT_TRUE(s.explicit_attempt_index);
  EXPECT_EQ(s.submissions[0].attempt_index, 2);
  EXPECT_EQ(s.submissions[1].attempt_index, 4);
}

// Round trip, with a random corpus and shuffled input order.
TEST(CorpusProperty, WriteLoadRoundTrip) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> lines;
    int students = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int s = 0; s < students; ++s)
      for (int p = 0; p < 3; ++p) {
        int n = std::uniform_int_distribution<int>(0, 5)(rng);
        for (int a = 0; a < n; ++a)
          lines.push_back(record("s" + std::to_string(s), "p" + std::to_string(p),
                                 std::uniform_int_distribution<int>(0, 20)(rng) * 1000,
                                 "v" + std::to_string(std::uniform_int_distribution<int>(0, 3)(rng))));
      }
    std::shuffle(lines.begin(), lines.end(), rng);
    std::string text = header();
    for (const auto& l : lines) text += l;
    auto first = load(text).corpus;
    std::ostringstream out;
    write_corpus(out, first);
    auto second = load(out.str()).corpus;
    std::ostringstream again;
    write_corpus(again, second);
    EXPECT_EQ(out.str(), again.str());
    EXPECT_EQ(corpus_stats(first), corpus_stats(second));
    for (const auto& st : second.streams)
      for (std::size_t i = 0; i < st.size(); ++i) {
        EXPECT_EQ(st.submissions[i].attempt_index, static_cast<int>(i));
        if (i) EXPECT_LE(st.submissions[i - 1].timestamp_ms, st.submissions[i].timestamp_ms);
      }
  }
}

TEST(Split, SelectsManifestStreams) {
  std::string text = header();
  for (auto s : {"s1", "s2"})
    for (auto p : {"p1", "p2"}) text += record(s, p, 1, "x");
  auto c = load(text).corpus;
  SplitManifest m{SplitName::TestNsOp, {{"s2", "p1", "fa23"}}};
  auto split = build_split(c, m);
  ASSERT_EQ(split.streams.size(), 1u);
  EXPECT_EQ(split.streams[0].student_id, "s2");
  EXPECT_TRUE(build_split(c, SplitManifest{SplitName::Custom, {}}).streams.empty());
  // Idempotent.
  EXPECT_EQ(build_split(split, m).streams.size(), 1u);
}

TEST(Split, UnknownKeyIsNamed) {
  auto c = load(header() + record("s1", "p1", 1, "x")).corpus;
  try {
    build_split(c, SplitManifest{SplitName::Custom, {{"ghost", "p1", "fa23"}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Split, ManifestsMustBeDisjoint) {
  SplitManifest a{SplitName::TestNsOp, {{"s", "p", "f"}}};
  SplitManifest b{SplitName::TestNsNp, {{"s", "p", "f"}}};
  EXPECT_THROW(check_disjoint(a, b), Error);
  b.keys[0].problem_id = "q";
  EXPECT_NO_THROW(check_disjoint(a, b));
}

TEST(Split, ManifestJsonRoundTrip) {
  SplitManifest m{SplitName::TestNsNp, {{"a", "b", "c"}}};
  auto back = parse_manifest(manifest_to_json(m));
  EXPECT_EQ(back.name, SplitName::TestNsNp);
  EXPECT_EQ(back.keys, m.keys);
}

TEST(Stats, LargeCountFormatting) {
  EXPECT_EQ(group_thousands(689023), "689,023");
  EXPECT_EQ(group_thousands(5478), "5,478");
  EXPECT_EQ(group_thousands(33), "33");
  EXPECT_EQ(format_stats(CorpusStats{5478, 33, 0, 689023}), "5,478 / 33 / 689,023");
}

TEST(Problems, LoadsSyntheticProblemFile) {
  auto problems = load_problems(testing_paths::data("synthetic/problems.json"));
  ASSERT_EQ(problems.size(), 3u);
  EXPECT_EQ(problems[0].doctests.size(), 3u);
}
