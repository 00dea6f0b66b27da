#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <random>
#include <thread>

// Eigen before httplib: <resolv.h> defines a `_res` macro that breaks Eigen.
#include "support/oracles.hpp"
#include "trajeval/embedding/embedding.hpp"
#include "trajeval/embedding/provider.hpp"
#include "trajeval/util/text.hpp"

#include <httplib.h>
#include <json.hpp>

using namespace trajeval;
using namespace trajeval::embedding;

namespace {

EmbeddingSet make_set(const oracle::Rows& rows) {
  EmbeddingSet s;
  s.matrix.resize(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s.keys.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < rows[i].size(); ++j) s.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return s;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("trajeval_embedding_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Knn, MatchesBruteForceOracleExactly) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  std::uniform_int_distribution<int> kk(1, 12);
  for (int trial = 0; trial < 120; ++trial) {
    auto s = oracle::random_rows(rng, size(rng), 8);
    auto g = oracle::random_rows(rng, size(rng), 8);
    int k = kk(rng);
    EmbeddingSet ss = make_set(s), gs = make_set(g);
    EXPECT_EQ(knn_distance(ss, gs, k), oracle::knn_distance(s, g, static_cast<std::size_t>(k))) << "trial " << trial;
    EXPECT_EQ(knn_coverage(ss, gs, k), oracle::knn_coverage(s, g, static_cast<std::size_t>(k))) << "trial " << trial;
  }
}

TEST(Knn, TiesGoToLowerIndex) {
  // Three generated rows at the same distance; k=1 must pick row 0.
  Matrix q(1, 2);
  q << 1, 0;
  Matrix c(3, 2);
  c << 0, 1, 0, -1, 0, 1;
  auto near = nearest_neighbors(q, c, 2);
  ASSERT_EQ(near[0].size(), 2u);
  EXPECT_EQ(near[0][0], 0);
  EXPECT_EQ(near[0][1], 1);
}

TEST(Knn, WorkedExamples) {
  EmbeddingSet s = make_set({{1, 0}});
  EmbeddingSet g = make_set({{1, 0}, {0, 1}, {-1, 0}});
  EXPECT_DOUBLE_EQ(knn_distance(s, g, 3), 1.0);
  EXPECT_DOUBLE_EQ(knn_distance(s, g, 1), 0.0);
  // k larger than the candidate set uses all of it.
  EXPECT_DOUBLE_EQ(knn_distance(s, g, 50), 1.0);

  EmbeddingSet two = make_set({{1, 0}, {0, 1}});
  EmbeddingSet one = make_set({{1, 1}});
  EXPECT_DOUBLE_EQ(knn_coverage(two, one, 10), 1.0);
  EXPECT_DOUBLE_EQ(knn_coverage(two, one, 1), 0.5);
}

TEST(Knn, IdenticalSetsHaveZeroDistanceAndFullCoverage) {
  std::mt19937 rng(11);
  for (int t = 0; t < 20; ++t) {
    auto rows = oracle::random_rows(rng, 30, 8);
    EmbeddingSet a = make_set(rows);
    EXPECT_NEAR(knn_distance(a, a, 1), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(knn_coverage(a, a, 1), 1.0);
  }
}

TEST(Knn, CoverageIsMonotoneInK) {
  std::mt19937 rng(12);
  for (int t = 0; t < 30; ++t) {
    EmbeddingSet s = make_set(oracle::random_rows(rng, 60, 8));
    EmbeddingSet g = make_set(oracle::random_rows(rng, 15, 8));
    double prev = 0;
    for (int k = 1; k <= 20; ++k) {
      double c = knn_coverage(s, g, k);
      EXPECT_GE(c, prev);
      EXPECT_LE(c, 1.0);
      prev = c;
    }
  }
}

TEST(Knn, CosineIgnoresRowScale) {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> scale(0.1, 50.0);
  for (int t = 0; t < 20; ++t) {
    auto s = oracle::random_rows(rng, 40, 8);
    auto g = oracle::random_rows(rng, 25, 8);
    EmbeddingSet a = make_set(s), b = make_set(g);
    EmbeddingSet a2 = a, b2 = b;
    for (Eigen::Index i = 0; i < a2.rows(); ++i) a2.matrix.row(i) *= scale(rng);
    for (Eigen::Index i = 0; i < b2.rows(); ++i) b2.matrix.row(i) *= scale(rng);
    EXPECT_NEAR(knn_distance(a, b, 3), knn_distance(a2, b2, 3), 1e-12);
    EXPECT_NEAR(knn_distance(a, b, 3), knn_distance(normalized(a), normalized(b), 3), 1e-12);
  }
}

TEST(Knn, CoverageDirectionsCountDifferentSides) {
  EmbeddingSet s = make_set({{1, 0}, {0.9, 0.1}, {0, 1}});
  EmbeddingSet g = make_set({{1, 0.05}});
  EXPECT_DOUBLE_EQ(knn_coverage(s, g, 1, Distance::Cosine, CoverageDirection::GeneratedToStudents), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(knn_coverage(s, g, 1, Distance::Cosine, CoverageDirection::StudentsToGenerated), 1.0);
}

TEST(Knn, RejectsBadInput) {
  EmbeddingSet s = make_set({{1, 0}});
  EmbeddingSet empty;
  EXPECT_THROW(knn_distance(s, empty), Error);
  EXPECT_THROW(knn_distance(s, s, 0), Error);
  EXPECT_THROW(knn_distance(s, make_set({{1, 0, 0}})), Error);
  EXPECT_THROW(knn_distance(s, make_set({{0, 0}})), Error);
  EXPECT_EQ(parse_coverage_direction(to_string(CoverageDirection::StudentsToGenerated)),
            CoverageDirection::StudentsToGenerated);
  EXPECT_THROW(parse_distance("manhattan"), Error);
}

TEST(Projection, CollinearPointsHaveNoSecondAxisVariance) {
  EmbeddingSet line = make_set({{1, 0, 0}, {2, 1, 0}, {3, 2, 0}, {5, 4, 0}});
  Projection2D p = project_2d({&line});
  EXPECT_NEAR(p.explained[0], 1.0, 1e-12);
  EXPECT_EQ(p.explained[1], 0.0);
  for (Eigen::Index i = 0; i < p.coords.rows(); ++i) EXPECT_EQ(p.coords(i, 1), 0.0);
}

TEST(Projection, RankOneInputIsAnError) {
  EmbeddingSet same = make_set({{1, 2}, {1, 2}, {1, 2}});
  EXPECT_THROW(project_2d({&same}), Error);
  EmbeddingSet tiny = make_set({{1, 2}, {2, 1}});
  EXPECT_THROW(project_2d({&tiny}), Error);
}

TEST(Projection, MatchesPowerIterationAndSignRule) {
  std::mt19937 rng(21);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 25; ++t) {
    oracle::Rows rows(40, std::vector<double>(5));
    for (auto& r : rows)
      for (std::size_t j = 0; j < 5; ++j) r[j] = nd(rng) * static_cast<double>(5 - j);
    EmbeddingSet a = make_set({rows.begin(), rows.begin() + 25});
    EmbeddingSet b = make_set({rows.begin() + 25, rows.end()});
    Projection2D p = project_2d({&a, &b});
    ASSERT_EQ(p.set_of_row.size(), 40u);
    EXPECT_EQ(p.set_of_row[24], 0u);
    EXPECT_EQ(p.set_of_row[25], 1u);

    // Centered covariance (not standardized) for the oracle.
    std::vector<double> mu(5, 0);
    for (const auto& r : rows)
      for (std::size_t j = 0; j < 5; ++j) mu[j] += r[j] / 40.0;
    std::vector<std::vector<double>> cov(5, std::vector<double>(5, 0));
    for (const auto& r : rows)
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) cov[i][j] += (r[i] - mu[i]) * (r[j] - mu[j]);
    auto v = oracle::power_iteration(cov);

    // X^T (X a) = lambda a, so X^T times the first coordinate column is
    // parallel to the first axis.
    double dot = 0, nv = 0, np = 0;
    std::vector<double> axis(5, 0.0);
    for (int i = 0; i < 40; ++i)
      for (int j = 0; j < 5; ++j) axis[j] += (rows[i][j] - mu[j]) * p.coords(i, 0);
    for (int j = 0; j < 5; ++j) {
      dot += axis[j] * v[j];
      nv += v[j] * v[j];
      np += axis[j] * axis[j];
    }
    EXPECT_GT(std::abs(dot) / std::sqrt(nv * np), 1 - 1e-8);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < 5; ++j)
      if (std::abs(axis[j]) > std::abs(axis[arg])) arg = j;
    EXPECT_GT(axis[arg], 0.0);
    EXPECT_GT(p.explained[0], p.explained[1]);
    EXPECT_LE(p.explained[0] + p.explained[1], 1.0 + 1e-12);
  }
}

TEST(VectorStoreTest, RoundTripsThroughDisk) {
  auto dir = scratch("store");
  VectorStore store("prov", 3);
  store.put("abc", {1, 2, 3});
  store.put("def", {0.5, -0.25, 1e-7});
  store.save(dir / "v.jsonl");
  VectorStore back = VectorStore::load(dir / "v.jsonl");
  EXPECT_EQ(back.provider_id(), "prov");
  EXPECT_EQ(back.dim(), 3u);
  ASSERT_NE(back.find("def"), nullptr);
  EXPECT_EQ(*back.find("def"), (std::vector<double>{0.5, -0.25, 1e-7}));
  EXPECT_EQ(back.find("zzz"), nullptr);
  EXPECT_THROW(store.put("x", {1}), Error);
}

TEST(PrecomputedProviderTest, MissingHashIsAnError) {
  VectorStore store("prov", 2);
  store.put(util::sha256_hex("a = 1\n"), {1, 0});
  PrecomputedProvider provider(store);
  EmbeddingSet ok = embed({"a = 1\n", "a = 1\n"}, {"k1", "k2"}, provider);
  EXPECT_EQ(ok.rows(), 2);
  EXPECT_TRUE(ok.normalized);
  EXPECT_EQ(ok.provider_id, "prov");
  EXPECT_THROW(embed({"b = 2\n"}, {"k"}, provider), Error);
}

namespace {

class CountingProvider : public Provider {
 public:
  std::string id() const override { return "counting"; }
  std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts,
                                               const std::vector<std::string>&) override {
    ++calls;
    texts_sent += texts.size();
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) out.push_back({static_cast<double>(t.size()), 1.0, 2.0});
    return out;
  }
  int calls = 0;
  std::size_t texts_sent = 0;
};

}  // namespace

TEST(Embed, DeduplicatesAndReusesCache) {
  auto dir = scratch("cache");
  CountingProvider provider;
  EmbedOptions opts;
  opts.batch_size = 2;
  opts.cache_dir = dir;
  std::vector<std::string> codes = {"x = 1\n", "yy = 2\n", "x = 1\n", "zzz = 3\n"};
  std::vector<std::string> keys = {"a", "b", "c", "d"};
  EmbeddingSet first = embed(codes, keys, provider, opts);
  EXPECT_EQ(provider.texts_sent, 3u);
  EXPECT_EQ(provider.calls, 2);
  EXPECT_EQ(first.matrix.row(0), first.matrix.row(2));
  EXPECT_TRUE(std::filesystem::exists(cache_path(dir, "counting")));

  EmbeddingSet second = embed(codes, keys, provider, opts);
  EXPECT_EQ(provider.texts_sent, 3u);
  EXPECT_EQ(first.matrix, second.matrix);

  opts.dim = 5;
  EXPECT_THROW(embed(codes, keys, provider, opts), Error);
}

namespace {

struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  StubServer() = default;
  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~StubServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/embed"; }
};

}  // namespace

TEST(HttpProviderTest, RetriesTransientFailures) {
  StubServer stub;
  std::atomic<int> hits{0};
  std::string auth;
  stub.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 503;
      return;
    }
    auth = req.get_header_value("Authorization");
    auto doc = nlohmann::json::parse(req.body);
    nlohmann::json vectors = nlohmann::json::array();
    for (const auto& t : doc["texts"]) vectors.push_back({t.get<std::string>().size(), 1});
    res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
  });
  stub.start();
  HttpProvider provider({stub.url(), "stub", "sekrit", std::chrono::milliseconds(5000), 3,
                         std::chrono::milliseconds(1), 1});
  auto v = provider.embed_batch({"ab", "abcd"}, {"h1", "h2"});
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[1][0], 4.0);
  EXPECT_EQ(hits.load(), 2);
  EXPECT_EQ(auth, "Bearer sekrit");
}

TEST(HttpProviderTest, AuthFailureAbortsWithoutRetry) {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server.Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  stub.start();
  HttpProvider provider({stub.url(), "stub", "", std::chrono::milliseconds(5000), 4,
                         std::chrono::milliseconds(1), 2});
  EXPECT_THROW(embed({"a\n", "b\n", "c\n"}, {"1", "2", "3"}, provider, {0, true, 1, std::nullopt}), AuthError);
  EXPECT_LE(hits.load(), 2);
}

TEST(HttpProviderTest, PersistentFailureNamesTheBatch) {
  StubServer stub;
  stub.server.Post("/embed", [&](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  stub.start();
  HttpProvider provider({stub.url(), "stub", "", std::chrono::milliseconds(5000), 2,
                         std::chrono::milliseconds(1), 1});
  try {
    embed({"a\n"}, {"1"}, provider);
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.batch_indices(), std::vector<std::size_t>{0});
  }
}
