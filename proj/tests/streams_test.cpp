#include <gtest/gtest.h>
#include <json.hpp>

#include "trajeval/streams/streams.hpp"

using namespace trajeval;
using namespace trajeval::streams;

namespace {

corpus::Stream make_stream(const std::string& student, const std::string& problem, int n, long long t0 = 0) {
  corpus::Stream s;
  s.student_id = student;
  s.problem_id = problem;
  s.semester = "fa23";
  for (int i = 0; i < n; ++i)
    s.submissions.push_back({student, problem, "fa23", t0 + i, "code" + std::to_string(i), std::nullopt, i});
  return s;
}

}  // namespace

TEST(StageIndices, Examples) {
  EXPECT_EQ(stage_indices(7), (StageIndices{0, 3, 6}));
  EXPECT_EQ(stage_indices(1), (StageIndices{0, 0, 0}));
  EXPECT_EQ(stage_indices(2), (StageIndices{0, 0, 1}));
  EXPECT_THROW(stage_indices(0), Error);
}

TEST(StageIndices, PropertyUpToFifty) {
  for (int n = 1; n <= 50; ++n) {
    auto s = stage_indices(n);
    EXPECT_EQ(s.first, 0);
    EXPECT_EQ(s.middle, (n - 1) / 2);
    EXPECT_EQ(s.last, n - 1);
    EXPECT_LE(s.first, s.middle);
    EXPECT_LE(s.middle, s.last);
  }
}

TEST(Stage, ParsesSynonym) {
  EXPECT_EQ(parse_stage("start"), Stage::First);
  EXPECT_EQ(parse_stage("first"), Stage::First);
  EXPECT_EQ(to_string(Stage::Middle), "middle");
  EXPECT_THROW(parse_stage("end"), Error);
}

TEST(AlignRelative, Examples) {
  EXPECT_EQ(align_relative(4, 10, 5), 2);
  EXPECT_EQ(align_relative(0, 10, 5), 0);
  EXPECT_EQ(align_relative(9, 10, 5), 4);
  EXPECT_EQ(align_relative(0, 1, 6), 0);
  // 1 * 2 / 4 = 0.5 rounds up.
  EXPECT_EQ(align_relative(1, 5, 3), 1);
}

TEST(AlignRelative, EndpointsAndMonotone) {
  for (int n = 1; n <= 50; ++n)
    for (int m = 1; m <= 50; ++m) {
      EXPECT_EQ(align_relative(0, n, m), 0);
      if (n > 1) EXPECT_EQ(align_relative(n - 1, n, m), m - 1);
      int prev = 0;
      for (int t = 0; t < n; ++t) {
        int v = align_relative(t, n, m);
        ASSERT_GE(v, prev);
        ASSERT_LT(v, m);
        prev = v;
      }
    }
}

TEST(LowRes, TargetsAndContexts) {
  auto s = make_stream("s", "p", 5, 100);
  auto ex = extract_low_res(s);
  ASSERT_EQ(ex.size(), 3u);
  EXPECT_EQ(ex[0].target->attempt_index, 0);
  EXPECT_EQ(ex[1].target->attempt_index, 2);
  EXPECT_EQ(ex[2].target->attempt_index, 4);
  auto prior = make_stream("s", "q", 3, 0);
  auto with = extract_low_res(s, &prior);
  EXPECT_EQ(with[0].context->attempt_index, 0);
  EXPECT_EQ(with[1].context->attempt_index, 1);
  EXPECT_EQ(with[2].context->attempt_index, 2);
  EXPECT_EQ(with[1].stage, Stage::Middle);
  EXPECT_EQ(with[1].context->problem_id, "q");
}

TEST(LowRes, PriorPreconditions) {
  auto s = make_stream("s", "p", 3);
  auto same_problem = make_stream("s", "p", 3);
  auto other_student = make_stream("t", "q", 3);
  EXPECT_THROW(extract_low_res(s, &same_problem), Error);
  EXPECT_THROW(extract_low_res(s, &other_student), Error);
}

TEST(HighRes, Examples) {
  auto s = make_stream("s", "p", 4);
  auto ex = extract_high_res(s, 1);
  ASSERT_EQ(ex.size(), 3u);
  for (int t = 1; t <= 3; ++t) {
    ASSERT_EQ(ex[t - 1].history.size(), 1u);
    EXPECT_EQ(ex[t - 1].history[0]->attempt_index, t - 1);
  }
  auto k3 = extract_high_res(s, 3);
  ASSERT_EQ(k3[0].history.size(), 1u);
  EXPECT_EQ(k3[0].history[0]->attempt_index, 0);
  EXPECT_TRUE(extract_high_res(make_stream("s", "p", 1), 1).empty());
}

TEST(HighRes, ContextSegmentEndsAtAlignedIndex) {
  auto s = make_stream("s", "p", 10, 1000);
  auto prior = make_stream("s", "q", 5, 0);
  auto ex = extract_high_res(s, 1, &prior);
  const auto& e = ex[3];  // target t = 4
  ASSERT_EQ(e.target->attempt_index, 4);
  ASSERT_TRUE(e.context_segment.has_value());
  ASSERT_EQ(e.context_segment->size(), 2u);
  EXPECT_EQ((*e.context_segment)[0]->attempt_index, 1);
  EXPECT_EQ((*e.context_segment)[1]->attempt_index, 2);
}

TEST(HighRes, PropertyCountAndNoLeakage) {
  for (int n = 1; n <= 50; ++n)
    for (int k : {1, 2, 3, 7}) {
      auto s = make_stream("s", "p", n);
      auto prior = make_stream("s", "q", 1 + (n * 7) % 13);
      auto ex = extract_high_res(s, k, &prior);
      ASSERT_EQ(ex.size(), static_cast<std::size_t>(n - 1));
      for (const auto& e : ex) {
        int t = e.target->attempt_index;
        EXPECT_EQ(e.history.size(), static_cast<std::size_t>(std::min(k, t)));
        for (std::size_t i = 0; i < e.history.size(); ++i) {
          EXPECT_LT(e.history[i]->attempt_index, t);
          if (i) EXPECT_LT(e.history[i - 1]->attempt_index, e.history[i]->attempt_index);
        }
        ASSERT_TRUE(e.context_segment);
        EXPECT_LE(e.context_segment->size(), static_cast<std::size_t>(k + 1));
        EXPECT_EQ(e.context_segment->back()->attempt_index, align_relative(t, n, static_cast<int>(prior.size())));
      }
    }
}

TEST(PriorStream, MostRecentEarlierProblem) {
  corpus::Corpus c;
  c.streams = {make_stream("s", "a", 2, 0), make_stream("s", "b", 2, 500), make_stream("s", "c", 2, 1000),
               make_stream("t", "a", 2, 700)};
  EXPECT_EQ(select_prior_stream(c, c.streams[2])->problem_id, "b");
  EXPECT_EQ(select_prior_stream(c, c.streams[0]), nullptr);
  EXPECT_EQ(select_prior_stream(c, c.streams[3]), nullptr);
}

TEST(Serialization, StableFieldNames) {
  auto s = make_stream("s", "p", 3);
  auto line = to_jsonl(extract_high_res(s, 1));
  auto first = nlohmann::json::parse(line.substr(0, line.find('\n')));
  EXPECT_TRUE(first.contains("stage"));
  EXPECT_TRUE(first.contains("target_ref"));
  EXPECT_TRUE(first.contains("history_refs"));
  EXPECT_TRUE(first.contains("context_refs"));
}
