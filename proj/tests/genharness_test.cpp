#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "support/genstub.hpp"
#include "trajeval/util/text.hpp"

using namespace trajeval;
using namespace trajeval::genharness;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("trajeval_gen_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string answer_for(const nlohmann::json& body) {
  // Echo a tiny program that depends on the prompt so records differ.
  std::string user = body["messages"].back()["content"];
  return "Here you go:\n<code>\ndef f(x):\n    return x + " + std::to_string(user.size() % 97) + "\n</code>\n";
}

}  // namespace

TEST(Template, SectionsAndSubstitution) {
  PromptTemplate t = PromptTemplate::parse("You are a student.\n---\nP: {{problem_statement}}\n"
                                           "{{#history}}H:\n{{history}}{{/history}}{{^history}}none{{/history}}",
                                           "t1");
  EXPECT_EQ(t.system, "You are a student.");
  auto names = t.placeholders();
  EXPECT_NE(std::find(names.begin(), names.end(), "history"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "problem_statement"), names.end());
  EXPECT_THROW(PromptTemplate::parse("{{#history}} unclosed", "bad"), Error);
}

TEST(Template, MissingPlaceholderIsReported) {
  corpus::Corpus c = genstub::synthetic_corpus();
  const corpus::Stream& s = c.streams.front();
  auto examples = streams::extract_high_res(s, 2, nullptr, c.problem(s.problem_id));
  ASSERT_FALSE(examples.empty());
  PromptTemplate bare = PromptTemplate::parse("Write code.", "bare");
  EXPECT_THROW(build_prompt(examples.front(), bare), Error);
}

TEST(Prompts, AreByteDeterministic) {
  corpus::Corpus a = genstub::synthetic_corpus();
  corpus::Corpus b = genstub::synthetic_corpus();
  auto pa = genstub::synthetic_prompts(a, 60);
  auto pb = genstub::synthetic_prompts(b, 60);
  ASSERT_EQ(pa.size(), 60u);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].system, pb[i].system);
    EXPECT_EQ(pa[i].user, pb[i].user);
  }
  EndpointConfig e;
  e.model = "m";
  EXPECT_EQ(request_body(pa[0], e, {}), request_body(pb[0], e, {}));
}

TEST(Prompts, HistoryPrecedesTargetAndIsWrapped) {
  corpus::Corpus c = genstub::synthetic_corpus();
  const corpus::Stream* s = nullptr;
  for (const auto& st : c.streams)
    if (st.size() >= 4) s = &st;
  ASSERT_NE(s, nullptr);
  auto ex = streams::extract_high_res(*s, 2, nullptr, c.problem(s->problem_id));
  Prompt p = build_prompt(ex.back(), default_template());
  EXPECT_EQ(p.example.attempt_index, ex.back().target->attempt_index);
  // The target's own code never appears in its prompt unless an earlier attempt
  // was identical.
  const std::string& target = ex.back().target->code;
  bool repeated = false;
  for (const auto* h : ex.back().history) repeated |= h->code == target;
  if (!repeated) EXPECT_EQ(p.user.find("<code>\n" + target), std::string::npos);
  for (const auto* h : ex.back().history) EXPECT_NE(p.user.find(h->code), std::string::npos);
}

TEST(Extract, CodeBlocks) {
  EXPECT_EQ(extract_code("a <code>\nx = 1\n</code> b"), "x = 1\n");
  EXPECT_EQ(extract_code("```python\ndef f():\n    pass\n```\n"), "def f():\n    pass\n");
  EXPECT_EQ(extract_code("<code>\n\n    y = 2\r\n</code>"), "    y = 2\n");
  EXPECT_FALSE(extract_code("no code here").has_value());
  EXPECT_FALSE(extract_code("<code>   \n</code>").has_value());
  EXPECT_FALSE(extract_code("```\nunterminated").has_value());
  // Tagged blocks win over fences.
  EXPECT_EQ(extract_code("```\na\n```\n<code>b</code>"), "b\n");
}

TEST(Ledger, RoundTrip) {
  auto dir = scratch("ledger");
  GenerationRecord r;
  r.example = {"s1", "p1", "sp24", 3, 1700000000123, "middle", true};
  r.template_id = "default";
  r.endpoint_id = "m@u";
  r.sampling.max_tokens = 256;
  r.prompt_sha256 = util::sha256_hex("x");
  r.status = RecordStatus::Ok;
  r.raw_response = "<code>\nx\n</code>";
  r.code = "x\n";
  r.attempts = 2;
  r.created_at = "2024-01-01T00:00:00Z";
  {
    Ledger ledger(dir / "l.jsonl");
    ledger.append(r);
    r.status = RecordStatus::ExtractionFailed;
    r.code.reset();
    ledger.append(r);
  }
  auto back = Ledger::read(dir / "l.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(record_to_json(back[1]), record_to_json(r));
  EXPECT_EQ(back[0].code, std::optional<std::string>("x\n"));
  EXPECT_EQ(back[0].example.timestamp_ms, 1700000000123);
  EXPECT_EQ(back[0].sampling.max_tokens, 256);
  EXPECT_THROW(record_from_json("{}"), Error);
}

TEST(Generate, TwentyPromptsAgainstStub) {
  corpus::Corpus c = genstub::synthetic_corpus();
  auto prompts = genstub::synthetic_prompts(c, 20);
  ASSERT_EQ(prompts.size(), 20u);
  genstub::ChatStub stub;
  stub.reply = [](int n, const nlohmann::json& body) -> std::pair<int, std::string> {
    if (n == 0) return {503, ""};
    if (n % 5 == 0) return {200, "I cannot help with that."};
    return {200, answer_for(body)};
  };
  stub.start();
  auto records = generate(prompts, stub.endpoint());
  ASSERT_EQ(records.size(), 20u);
  std::size_t ok = 0, failed = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].prompt_sha256, util::sha256_hex(prompts[i].system + "\n\n" + prompts[i].user));
    EXPECT_EQ(records[i].example.attempt_index, prompts[i].example.attempt_index);
    if (records[i].status == RecordStatus::Ok) ++ok;
    if (records[i].status == RecordStatus::ExtractionFailed) ++failed;
  }
  EXPECT_EQ(ok + failed, 20u);
  EXPECT_EQ(failed, 4u);
  EXPECT_EQ(stub.hits.load(), 21);

  CandidateBuild build = records_to_corpus(records, c.problems);
  EXPECT_EQ(build.excluded, failed);
  std::stringstream ss;
  corpus::write_corpus(ss, build.corpus);
  corpus::LoadOptions strict;
  strict.max_malformed_fraction = 0.0;
  auto loaded = corpus::load_corpus(ss, strict);
  EXPECT_TRUE(loaded.malformed.empty());
  EXPECT_EQ(loaded.corpus.submission_count() + build.duplicates, ok);
}

TEST(Generate, ExtractionFailureIsRecorded) {
  corpus::Corpus c = genstub::synthetic_corpus();
  auto prompts = genstub::synthetic_prompts(c, 3);
  genstub::ChatStub stub;
  stub.reply = [](int, const nlohmann::json&) -> std::pair<int, std::string> { return {200, "just prose"}; };
  stub.start();
  auto records = generate(prompts, stub.endpoint());
  for (const auto& r : records) {
    EXPECT_EQ(r.status, RecordStatus::ExtractionFailed);
    EXPECT_EQ(r.raw_response, "just prose");
    EXPECT_FALSE(r.code.has_value());
  }
  EXPECT_EQ(records_to_corpus(records).excluded, 3u);
}

TEST(Generate, PersistentFailureGivesErrorRecord) {
  corpus::Corpus c = genstub::synthetic_corpus();
  auto prompts = genstub::synthetic_prompts(c, 2);
  genstub::ChatStub stub;
  stub.reply = [](int, const nlohmann::json&) -> std::pair<int, std::string> { return {500, ""}; };
  stub.start();
  auto e = stub.endpoint();
  e.max_attempts = 3;
  e.concurrency = 1;
  auto records = generate(prompts, e);
  for (const auto& r : records) {
    EXPECT_EQ(r.status, RecordStatus::Error);
    EXPECT_EQ(r.attempts, 3);
    EXPECT_EQ(r.error, "HTTP 500");
  }
}

TEST(Generate, AuthFailureAborts) {
  corpus::Corpus c = genstub::synthetic_corpus();
  auto prompts = genstub::synthetic_prompts(c, 10);
  genstub::ChatStub stub;
  stub.reply = [](int, const nlohmann::json&) -> std::pair<int, std::string> { return {401, ""}; };
  stub.start();
  auto e = stub.endpoint();
  e.concurrency = 1;
  EXPECT_THROW(generate(prompts, e), AuthError);
  EXPECT_EQ(stub.hits.load(), 1);
}

TEST(Generate, BearerTokenAndSamplingAreSent) {
  corpus::Corpus c = genstub::synthetic_corpus();
  auto prompts = genstub::synthetic_prompts(c, 1);
  genstub::ChatStub stub;
  nlohmann::json seen;
  stub.reply = [&](int, const nlohmann::json& body) -> std::pair<int, std::string> {
    seen = body;
    return {200, answer_for(body)};
  };
  stub.start();
  auto e = stub.endpoint();
  SamplingParams s;
  s.temperature = 0.2;
  s.max_tokens = 64;
  generate(prompts, e, s);
  EXPECT_EQ(seen["model"], "stub-model");
  EXPECT_DOUBLE_EQ(seen["temperature"].get<double>(), 0.2);
  EXPECT_EQ(seen["max_tokens"], 64);
  EXPECT_EQ(seen["messages"][0]["role"], "system");
}

TEST(RateLimit, TokenBucketSpacesRequests) {
  TokenBucket bucket(50.0, 1);
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 6; ++i) bucket.acquire();
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GE(elapsed, 0.09);
}
