#include "trajeval/functional/functional.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "trajeval/python/parser.hpp"
#include "trajeval/util/subprocess.hpp"

#ifndef TRAJEVAL_SANDBOX_SCRIPT
#define TRAJEVAL_SANDBOX_SCRIPT "doctest_sandbox.py"
#endif

namespace trajeval::functional {

using nlohmann::json;

std::string_view to_string(ErrorType type) {
  switch (type) {
    case ErrorType::NoError:
      return "no_error";
    case ErrorType::Logical:
      return "logical";
    case ErrorType::Runtime:
      return "runtime";
    case ErrorType::Compile:
      return "compile";
  }
  return "compile";
}

ErrorType parse_error_type(std::string_view text) {
  for (ErrorType t : kErrorTypes)
    if (to_string(t) == text) return t;
  throw Error("unknown error type '" + std::string(text) + "'");
}

namespace {

std::string read_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The sandbox wrapped in a fresh user+network namespace, or empty when the
// kernel refuses one or the wrapped sandbox fails a self-test. The source is
// passed inline: paths readable here may not be inside the namespace.
std::vector<std::string> namespaced_command() {
  static const std::vector<std::string> cmd = [] {
    std::string source = read_file(TRAJEVAL_SANDBOX_SCRIPT);
    if (source.empty()) return std::vector<std::string>{};
    std::vector<std::string> c = {"unshare", "-rn", "python3", "-c", source};
    json probe = {{"code", "x = 1\n"},
                  {"doctests", json::array({{{"input", "x"}, {"expected", "1"}}})},
                  {"timeout_s", 5.0},
                  {"memory_mb", 512}};
    try {
      auto r = util::run_process(c, probe.dump(), std::chrono::milliseconds(10000));
      if (r.signaled || r.timed_out || r.exit_code != 0) return std::vector<std::string>{};
      json reply = json::parse(r.out);
      if (reply.value("status", "") != "ok") return std::vector<std::string>{};
    } catch (const std::exception&) {
      return std::vector<std::string>{};
    }
    return c;
  }();
  return cmd;
}

}  // namespace

ExecutorConfig default_executor_config() {
  ExecutorConfig cfg;
  // The script also refuses sockets itself; the namespace cuts the network
  // at the OS level where the kernel allows it.
  cfg.command = namespaced_command();
  if (cfg.command.empty()) cfg.command = {"python3", TRAJEVAL_SANDBOX_SCRIPT};
  unsigned hw = std::thread::hardware_concurrency();
  cfg.max_workers = static_cast<int>(std::clamp(hw, 1u, 8u));
  return cfg;
}

namespace {

struct SandboxRun {
  util::ProcessResult process;
  std::optional<json> reply;  // present when the output is a well-formed result
};

SandboxRun run_sandbox(const std::string& code, const std::vector<corpus::Doctest>& doctests,
                       const ExecutorConfig& cfg) {
  if (cfg.command.empty()) throw InfrastructureError("executor command is empty");
  if (!(cfg.test_timeout_s > 0)) throw InfrastructureError("test timeout must be positive");
  json request;
  request["code"] = code;
  request["doctests"] = json::array();
  for (const auto& t : doctests) request["doctests"].push_back({{"input", t.input}, {"expected", t.expected}});
  request["timeout_s"] = cfg.test_timeout_s;
  request["memory_mb"] = cfg.memory_mb;

  // Definitions plus every doctest may each use the per-test budget; the
  // extra seconds cover interpreter start-up.
  auto budget = std::chrono::milliseconds(
      static_cast<long long>(cfg.test_timeout_s * 1000.0 * static_cast<double>(doctests.size() + 1)) + 5000);
  SandboxRun run;
  try {
    util::TempDir dir(cfg.work_root);
    run.process = util::run_process(cfg.command, request.dump(), budget, dir.path());
  } catch (const Error& e) {
    throw InfrastructureError(std::string("sandbox launch failed: ") + e.what());
  }
  if (run.process.timed_out || run.process.signaled || run.process.exit_code != 0) return run;
  try {
    json reply = json::parse(run.process.out);
    if (reply.is_object() && reply.contains("status") && reply["status"].is_string() &&
        reply.contains("per_test") && reply["per_test"].is_array())
      run.reply = std::move(reply);
  } catch (const json::parse_error&) {
  }
  return run;
}

std::string tail(const std::string& s, std::size_t n) { return s.size() <= n ? s : s.substr(s.size() - n); }

FunctionalResult finish(FunctionalResult r) {
  r.pass_fraction = r.tests_total > 0 ? static_cast<double>(r.tests_passed) / r.tests_total : 0.0;
  r.full_pass = r.error_type == ErrorType::NoError;
  return r;
}

}  // namespace

void check_executor(const ExecutorConfig& cfg) {
  SandboxRun run = run_sandbox("x = 1\n", {{"x", "1"}}, cfg);
  if (!run.reply || (*run.reply)["status"] != "ok" || run.reply->at("per_test").size() != 1 ||
      !run.reply->at("per_test")[0].value("ok", false)) {
    throw InfrastructureError("executor self-test failed: " + tail(run.process.err, 500));
  }
}

FunctionalResult classify_from_execution(const std::string& code, const corpus::ProblemSpec& problem,
                                         const ExecutorConfig& cfg) {
  if (problem.doctests.empty()) throw Error("problem " + problem.problem_id + " has no doctests");
  FunctionalResult r;
  r.tests_total = static_cast<int>(problem.doctests.size());

  // Code the parser rejects can never run; skip the process.
  try {
    python::parse_module(code);
  } catch (const python::SyntaxError& e) {
    r.error_type = ErrorType::Compile;
    r.executor_log = std::string("status=compile_error\nparse: ") + e.what() + " (line " +
                     std::to_string(e.line()) + ")\n";
    return finish(r);
  }

  SandboxRun run = run_sandbox(code, problem.doctests, cfg);
  if (!run.reply) {
    r.error_type = ErrorType::Runtime;
    if (run.process.timed_out) {
      r.executor_log = "status=killed\nreason: watchdog timeout\n";
    } else if (run.process.signaled) {
      r.executor_log = "status=killed\nreason: signal " + std::to_string(run.process.signal) + "\n";
    } else {
      r.executor_log = "status=crashed\nexit: " + std::to_string(run.process.exit_code) + "\n";
    }
    r.executor_log += "stderr: " + tail(run.process.err, 2000) + "\n";
    return finish(r);
  }
  const json& reply = *run.reply;
  std::string status = reply["status"].get<std::string>();
  r.executor_log = "status=" + status + "\n";
  if (status != "ok") {
    r.error_type = ErrorType::Compile;
    r.executor_log += "stderr: " + tail(reply.value("stderr", std::string()), 2000) + "\n";
    return finish(r);
  }
  const json& tests = reply["per_test"];
  bool raised = false;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const json& t = tests[i];
    bool ok = t.value("ok", false);
    std::string exc = t.contains("raised") && t["raised"].is_string() ? t["raised"].get<std::string>() : "";
    if (ok) ++r.tests_passed;
    if (!ok && !exc.empty()) raised = true;
    r.executor_log += "test " + std::to_string(i + 1) + ": " + (ok ? "ok" : exc.empty() ? "wrong" : "raised " + exc) +
                      "\n";
  }
  if (tests.size() != problem.doctests.size()) {
    r.error_type = ErrorType::Runtime;
    r.executor_log += "incomplete: " + std::to_string(tests.size()) + " results\n";
  } else if (raised) {
    r.error_type = ErrorType::Runtime;
  } else if (r.tests_passed < r.tests_total) {
    r.error_type = ErrorType::Logical;
  } else {
    r.error_type = ErrorType::NoError;
  }
  return finish(r);
}

std::vector<FunctionalResult> classify_all(const std::vector<ExecutionJob>& jobs, const ExecutorConfig& cfg) {
  std::vector<FunctionalResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed) {
      std::size_t i = next++;
      if (i >= jobs.size()) return;
      try {
        results[i] = classify_from_execution(*jobs[i].code, *jobs[i].problem, cfg);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::size_t width = std::min<std::size_t>(std::max(1, cfg.max_workers), std::max<std::size_t>(1, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < width; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

// ---- grader transcripts ----------------------------------------------------

namespace {

std::string_view trim_left(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

bool is_exception_line(std::string_view s) {
  static const std::regex re(R"(^(Traceback \(most recent call last\)|[A-Za-z_][\w.]*(Error|Exception|Exit|Interrupt|Timeout)\b))");
  return std::regex_search(s.begin(), s.end(), re);
}

bool is_compile_line(std::string_view s) {
  static const std::regex re(R"(^(SyntaxError|IndentationError|TabError)\b)");
  return std::regex_search(s.begin(), s.end(), re);
}

}  // namespace

std::optional<ErrorType> classify_from_grader_text(std::string_view text) {
  enum class Block { Outside, Expected, Got };
  Block block = Block::Outside;
  bool compile = false;
  bool expectation = false;
  bool got_exception = false;
  bool loose_traceback = false;
  bool timeout = false;
  bool passed = false;

  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::string_view body = trim_left(line);
    bool commented = !body.empty() && body.front() == '#';
    std::string_view content = commented ? trim_left(body.substr(1)) : body;

    if (is_compile_line(content)) compile = true;
    if (commented && content.rfind("Error: evaluation exceeded", 0) == 0) timeout = true;
    if (commented && content.rfind("Error: expected", 0) == 0) {
      block = Block::Expected;
      expectation = true;
      continue;
    }
    if (block != Block::Outside && commented && content.rfind("but got", 0) == 0) {
      block = Block::Got;
      continue;
    }
    if (block != Block::Outside && !commented) block = Block::Outside;
    if (block == Block::Got && is_exception_line(content)) got_exception = true;
    if (block == Block::Outside && !commented && content.rfind("Traceback (most recent call last):", 0) == 0)
      loose_traceback = true;
    if (content.find("All tests passed") != std::string_view::npos ||
        content.find("No cases failed") != std::string_view::npos)
      passed = true;
  }

  if (compile) return ErrorType::Compile;
  if (timeout || got_exception || (loose_traceback && !expectation)) return ErrorType::Runtime;
  if (expectation) return ErrorType::Logical;
  if (passed) return ErrorType::NoError;
  return std::nullopt;
}

// ---- aggregation -----------------------------------------------------------

std::vector<ErrorDistribution> error_distribution(const std::vector<LabelledOutcome>& outcomes,
                                                  std::vector<std::string>* warnings) {
  std::vector<ErrorDistribution> groups;
  std::map<std::string, std::size_t> index;
  for (const auto& o : outcomes) {
    auto [it, inserted] = index.try_emplace(o.group, groups.size());
    if (inserted) groups.push_back(ErrorDistribution{o.group, {}, 0, 0, {}});
    ErrorDistribution& g = groups[it->second];
    if (o.type) {
      ++g.counts[static_cast<std::size_t>(*o.type)];
      ++g.total;
    } else {
      ++g.unknown;
    }
  }
  std::vector<ErrorDistribution> out;
  for (auto& g : groups) {
    if (g.total == 0) {
      if (warnings != nullptr) warnings->push_back("error distribution: group '" + g.group + "' has no classified outcomes");
      continue;
    }
    for (std::size_t i = 0; i < 4; ++i) g.proportions[i] = static_cast<double>(g.counts[i]) / static_cast<double>(g.total);
    out.push_back(g);
  }
  return out;
}

PassRates pass_rates(const std::vector<FunctionalResult>& results) {
  PassRates p;
  p.n = results.size();
  if (results.empty()) return p;
  double full = 0, frac = 0;
  for (const auto& r : results) {
    full += r.full_pass ? 1.0 : 0.0;
    frac += r.pass_fraction;
  }
  p.full_pass = full / static_cast<double>(results.size());
  p.pass_fraction = frac / static_cast<double>(results.size());
  return p;
}

}  // namespace trajeval::functional
