#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"
#include "trajeval/stats/stats.hpp"

using namespace trajeval;
using namespace trajeval::stats;

TEST(Levenshtein, KnownPairs) {
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("abc", ""), 3u);
  EXPECT_EQ(levenshtein("same", "same"), 0u);
  // Code points, not bytes.
  EXPECT_EQ(levenshtein("caf\xc3\xa9", "cafe"), 1u);
  EXPECT_EQ(levenshtein("\xf0\x9f\x98\x80", ""), 1u);
}

TEST(Levenshtein, MatchesDynamicProgrammingOracle) {
  std::mt19937 rng(5);
  for (int t = 0; t < 1000; ++t) {
    auto a = oracle::random_text(rng, 300);
    auto b = oracle::random_text(rng, 300);
    ASSERT_EQ(levenshtein(oracle::utf8(a), oracle::utf8(b)), oracle::levenshtein(a, b)) << "pair " << t;
  }
}

TEST(Levenshtein, IsAMetric) {
  std::mt19937 rng(6);
  for (int t = 0; t < 200; ++t) {
    auto a = oracle::utf8(oracle::random_text(rng, 40));
    auto b = oracle::utf8(oracle::random_text(rng, 40));
    auto c = oracle::utf8(oracle::random_text(rng, 40));
    EXPECT_EQ(levenshtein(a, b), levenshtein(b, a));
    EXPECT_LE(levenshtein(a, c), levenshtein(a, b) + levenshtein(b, c));
  }
}

TEST(StyleModel, MatchesPowerIterationOracle) {
  std::mt19937 rng(17);
  std::uniform_int_distribution<std::size_t> rows(20, 200);
  for (int t = 0; t < 100; ++t) {
    auto ms = oracle::random_metrics(rng, rows(rng));
    StyleScoreModel model = fit_style_model(ms);
    auto cov = oracle::zscore_cov(oracle::feature_rows(ms));
    auto v = oracle::power_iteration(cov);
    double dot = 0, nv = 0;
    for (int j = 0; j < 5; ++j) {
      dot += model.loading(j) * v[j];
      nv += v[j] * v[j];
    }
    EXPECT_GT(std::abs(dot) / std::sqrt(nv), 1 - 1e-8) << "matrix " << t;
    EXPECT_GT(model.loading(0), 0.0);

    std::vector<double> scores;
    for (const auto& m : ms) scores.push_back(*style_score(model, m));
    Summary s = summarize(scores);
    EXPECT_LT(std::abs(s.mean), 1e-9);
    EXPECT_NEAR(s.std * s.std, oracle::rayleigh(cov, v), 1e-6);
    EXPECT_NEAR(model.eigenvalue, oracle::rayleigh(cov, v), 1e-6);
  }
}

TEST(StyleModel, LongerCodeScoresHigher) {
  std::mt19937 rng(18);
  auto ms = oracle::random_metrics(rng, 100);
  StyleScoreModel model = fit_style_model(ms);
  analysis::CodeMetrics small = ms[0], big = ms[0];
  big.char_count *= 3;
  big.line_count *= 3;
  big.ast_nodes *= 3;
  EXPECT_GT(*style_score(model, big), *style_score(model, small));
  small.parse_ok = false;
  EXPECT_FALSE(style_score(model, small).has_value());
}

TEST(StyleModel, ConstantFeatureWarnsAndStillFits) {
  std::mt19937 rng(19);
  auto ms = oracle::random_metrics(rng, 50);
  for (auto& m : ms) m.ast_depth = 4;
  std::vector<std::string> warnings;
  StyleScoreModel model = fit_style_model(ms, &warnings);
  EXPECT_FALSE(warnings.empty());
  EXPECT_EQ(model.scales(2), 1.0);
  EXPECT_NEAR(model.loading(2), 0.0, 1e-12);
}

TEST(StyleModel, JsonRoundTrip) {
  std::mt19937 rng(20);
  StyleScoreModel model = fit_style_model(oracle::random_metrics(rng, 80));
  StyleScoreModel back = StyleScoreModel::from_json(model.to_json());
  EXPECT_EQ(back.to_json(), model.to_json());
  EXPECT_EQ(back.digest(), model.digest());
  EXPECT_EQ(back.fitted_on, 80u);
}

TEST(StyleModel, TooFewRowsIsAnError) {
  std::mt19937 rng(21);
  EXPECT_THROW(fit_style_model(oracle::random_metrics(rng, 1)), Error);
}

TEST(Progress, BinsByRelativePosition) {
  // n=1 lands in bin 0; the last attempt joins the last bin.
  std::vector<std::vector<std::optional<double>>> v = {
      {1.0}, {0.0, 1.0}, {0.0, 0.5, 1.0}, {0.0, std::nullopt, 0.2, 0.4, 0.6, 0.8, 0.9, 1.0, 1.0, 1.0, 1.0}};
  ProgressCurve c = progress_curve(v, 10, "x");
  EXPECT_EQ(c.metric, "x");
  ASSERT_EQ(c.bins.size(), 10u);
  EXPECT_EQ(c.bins[0].count, 4u);
  EXPECT_DOUBLE_EQ(*c.bins[0].mean, 0.25);
  EXPECT_EQ(c.bins[5].count, 2u);
  EXPECT_EQ(c.bins[9].count, 4u);
  EXPECT_DOUBLE_EQ(*c.bins[9].mean, 1.0);
  EXPECT_EQ(c.total(), 16u);
  EXPECT_FALSE(c.bins[1].mean.has_value());
  EXPECT_DOUBLE_EQ(c.bins[3].lo, 0.3);
}

TEST(Progress, CountsEveryDefinedValueOnce) {
  std::mt19937 rng(22);
  std::uniform_int_distribution<int> len(1, 30), coin(0, 4);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::vector<std::optional<double>>> v(1 + t % 7);
    std::size_t defined = 0;
    for (auto& s : v) {
      s.resize(static_cast<std::size_t>(len(rng)));
      for (auto& x : s)
        if (coin(rng) != 0) {
          x = coin(rng);
          ++defined;
        }
    }
    for (int bins : {1, 3, 10, 17}) EXPECT_EQ(progress_curve(v, bins).total(), defined);
  }
  EXPECT_THROW(progress_curve(std::vector<std::vector<std::optional<double>>>{{1.0}}, 0), Error);
}

TEST(Mae, SkipsIncompletePairs) {
  PairwiseMAE m = pairwise_mae({{1.0, 3.0}, {std::nullopt, 2.0}, {5.0, 4.0}}, "m");
  EXPECT_EQ(m.pairs, 2u);
  EXPECT_EQ(m.skipped, 1u);
  EXPECT_DOUBLE_EQ(m.value, 1.5);
  EXPECT_THROW(pairwise_mae({{std::nullopt, 1.0}}), Error);
}

TEST(Mae, ScalesLinearly) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::pair<std::optional<double>, std::optional<double>>> a, b;
    for (int i = 0; i < 20; ++i) {
      double x = u(rng), y = u(rng);
      a.emplace_back(x, y);
      b.emplace_back(4 * x + 1, 4 * y + 1);
    }
    EXPECT_NEAR(pairwise_mae(b).value, 4 * pairwise_mae(a).value, 1e-12);
  }
}

TEST(Summary, PopulationStd) {
  Summary s = summarize(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9});
  EXPECT_EQ(s.n, 8u);
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_DOUBLE_EQ(s.std, 2.0);
  Summary e = summarize(std::vector<std::optional<double>>{std::nullopt});
  EXPECT_EQ(e.n, 0u);
}
