#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "trajeval/analysis/metrics.hpp"
#include "trajeval/corpus/corpus.hpp"
#include "trajeval/genharness/genharness.hpp"
#include "trajeval/report/report.hpp"
#include "trajeval/streams/streams.hpp"
#include "trajeval/util/subprocess.hpp"
#include "trajeval/util/text.hpp"

namespace fs = std::filesystem;
using namespace trajeval;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_corpus_file(const fs::path& path, const corpus::Corpus& c) {
  std::ostringstream out;
  corpus::write_corpus(out, c);
  write_text(path, out.str());
}

corpus::Corpus load_with_problems(const std::string& path, const std::string& problems, bool dedup) {
  corpus::LoadOptions opts;
  opts.dedup_consecutive = dedup;
  auto loaded = corpus::load_corpus(fs::path(path), opts);
  for (const auto& m : loaded.malformed)
    std::cerr << "warning: " << path << ":" << m.line_number << ": " << m.reason << "\n";
  if (!problems.empty())
    for (auto& p : corpus::load_problems(problems)) loaded.corpus.problems[p.problem_id] = p;
  return std::move(loaded.corpus);
}

struct ExtractOptions {
  std::string corpus;
  std::string problems;
  std::string manifest;
  std::string mode = "low-res";
  int k = 1;
  bool context = false;
};

void add_extract_options(CLI::App* cmd, ExtractOptions& o) {
  cmd->add_option("--corpus", o.corpus, "Reference corpus (JSONL)")->required();
  cmd->add_option("--problems", o.problems, "Problem file or directory");
  cmd->add_option("--manifest", o.manifest, "Restrict to the streams of a split manifest");
  cmd->add_option("--mode", o.mode, "low-res or high-res")->check(CLI::IsMember({"low-res", "high-res"}));
  cmd->add_option("-k", o.k, "High-res history length")->check(CLI::PositiveNumber);
  cmd->add_flag("--context", o.context, "Attach a segment of the student's prior problem");
}

// Owns the corpora the examples point into. Targets come from the split,
// prior problems from the whole corpus.
struct Extraction {
  corpus::Corpus full;
  corpus::Corpus corpus;
  std::vector<streams::LowResExample> low;
  std::vector<streams::HighResExample> high;
};

std::unique_ptr<Extraction> extract(const ExtractOptions& o) {
  auto x = std::make_unique<Extraction>();
  x->full = load_with_problems(o.corpus, o.problems, false);
  x->corpus = o.manifest.empty() ? x->full : corpus::build_split(x->full, corpus::load_manifest(o.manifest));
  x->corpus.problems = x->full.problems;
  for (const auto& s : x->corpus.streams) {
    const corpus::Stream* prior = o.context ? streams::select_prior_stream(x->full, s) : nullptr;
    const corpus::ProblemSpec* problem = x->corpus.problem(s.problem_id);
    if (o.mode == "low-res") {
      for (auto& e : streams::extract_low_res(s, prior, problem)) x->low.push_back(e);
    } else {
      for (auto& e : streams::extract_high_res(s, o.k, prior, problem)) x->high.push_back(std::move(e));
    }
  }
  return x;
}

std::vector<genharness::Prompt> prompts_for(const Extraction& x, const genharness::PromptTemplate& tmpl) {
  std::vector<genharness::Prompt> prompts;
  for (const auto& e : x.low) prompts.push_back(genharness::build_prompt(e, tmpl));
  for (const auto& e : x.high) prompts.push_back(genharness::build_prompt(e, tmpl));
  return prompts;
}

std::vector<std::string> split_formats(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate how student-like code-submission trajectories are"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Evaluation config (JSON)");
  app.fallthrough();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a raw corpus and write it in canonical order");
  std::string in_path, out_path;
  bool dedup = false;
  double max_malformed = 0.01;
  ingest->add_option("input", in_path, "Corpus JSONL")->required();
  ingest->add_option("-o,--output", out_path, "Canonical corpus to write");
  ingest->add_flag("--dedup-consecutive", dedup, "Drop consecutive byte-identical submissions");
  ingest->add_option("--max-malformed-fraction", max_malformed, "Tolerated share of malformed records");

  // split
  auto* split = app.add_subcommand("split", "Keep the streams named by a manifest");
  std::string split_corpus, split_manifest, split_out;
  std::vector<std::string> disjoint_with;
  split->add_option("--corpus", split_corpus)->required();
  split->add_option("--manifest", split_manifest)->required();
  split->add_option("-o,--output", split_out)->required();
  split->add_option("--disjoint-with", disjoint_with, "Other manifests that must share no key");

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "Extract low- or high-resolution examples");
  ExtractOptions xo;
  std::string extract_out, prompts_out, template_path;
  add_extract_options(extract_cmd, xo);
  extract_cmd->add_option("-o,--output", extract_out, "Examples JSONL")->required();
  extract_cmd->add_option("--prompts", prompts_out, "Also write rendered prompts (JSONL)");
  extract_cmd->add_option("--template", template_path, "Prompt template file");

  // generate
  auto* gen = app.add_subcommand("generate", "Query a chat-completion endpoint for candidate submissions");
  ExtractOptions go;
  genharness::EndpointConfig endpoint;
  genharness::SamplingParams sampling;
  std::string gen_template, ledger_path, candidate_out, api_key_env = "TRAJEVAL_API_KEY";
  bool dry_run = false;
  add_extract_options(gen, go);
  gen->add_option("--template", gen_template, "Prompt template file");
  gen->add_option("--url", endpoint.url, "Chat-completion endpoint URL");
  gen->add_option("--model", endpoint.model, "Model name sent with each request");
  gen->add_option("--endpoint-id", endpoint.endpoint_id, "Label recorded in the ledger");
  gen->add_option("--api-key-env", api_key_env, "Environment variable holding the bearer token");
  gen->add_option("--concurrency", endpoint.concurrency)->check(CLI::PositiveNumber);
  gen->add_option("--rps", endpoint.requests_per_second)->check(CLI::PositiveNumber);
  gen->add_option("--burst", endpoint.burst)->check(CLI::PositiveNumber);
  gen->add_option("--max-attempts", endpoint.max_attempts)->check(CLI::PositiveNumber);
  gen->add_option("--temperature", sampling.temperature);
  gen->add_option("--top-p", sampling.top_p);
  gen->add_option("--max-tokens", sampling.max_tokens);
  gen->add_option("--ledger", ledger_path, "Append-only record ledger (JSONL)")->required();
  gen->add_option("--candidate-out", candidate_out, "Write the candidate corpus built from the ledger");
  gen->add_flag("--dry-run", dry_run, "Render prompts and print their count without sending them");

  // eval
  auto* eval = app.add_subcommand("eval", "Run the metric suite and write a report");
  std::string eval_out = "report";
  std::string formats = "json,csv,md";
  std::string executor_cmd, coverage_direction;
  std::optional<double> test_timeout;
  std::optional<int> max_workers, progress_bins;
  std::optional<std::size_t> embed_batch;
  bool eval_dedup = false;
  eval->add_option("-o,--output", eval_out, "Output directory");
  eval->add_option("--format", formats, "Comma-separated: json, csv, md");
  eval->add_option("--executor-cmd", executor_cmd, "Sandbox command line");
  eval->add_option("--test-timeout-s", test_timeout, "Per-doctest timeout in seconds")->check(CLI::PositiveNumber);
  eval->add_option("--max-workers", max_workers, "Concurrent sandboxes")->check(CLI::PositiveNumber);
  eval->add_option("--embed-batch", embed_batch, "Texts per embedding request")->check(CLI::PositiveNumber);
  eval->add_option("--coverage-direction", coverage_direction, "generated-to-students or students-to-generated");
  eval->add_option("--progress-bins", progress_bins, "Number of progress bins")->check(CLI::PositiveNumber);
  eval->add_flag("--dedup-consecutive", eval_dedup, "Drop consecutive byte-identical reference submissions");

  // render
  auto* render = app.add_subcommand("render", "Re-render a saved report.json");
  std::string report_path, render_out = ".", render_formats = "md";
  render->add_option("report", report_path, "report.json")->required();
  render->add_option("-o,--output", render_out, "Output directory");
  render->add_option("--format", render_formats, "Comma-separated: json, csv, md");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Per-submission verbosity, AST and style metrics as CSV");
  std::string analyze_corpus, analyze_out;
  analyze->add_option("--corpus", analyze_corpus)->required();
  analyze->add_option("-o,--output", analyze_out, "CSV file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      corpus::LoadOptions opts;
      opts.dedup_consecutive = dedup;
      opts.max_malformed_fraction = max_malformed;
      auto loaded = corpus::load_corpus(fs::path(in_path), opts);
      for (const auto& m : loaded.malformed) std::cerr << "malformed line " << m.line_number << ": " << m.reason << "\n";
      if (!out_path.empty()) write_corpus_file(out_path, loaded.corpus);
      std::cout << corpus::format_stats(corpus::corpus_stats(loaded.corpus)) << "\n";
      std::cout << "records " << loaded.records << ", malformed " << loaded.malformed.size() << ", deduplicated "
                << loaded.dedup_dropped << "\n";
    } else if (*split) {
      auto manifest = corpus::load_manifest(split_manifest);
      for (const auto& other : disjoint_with) corpus::check_disjoint(manifest, corpus::load_manifest(other));
      auto loaded = corpus::load_corpus(fs::path(split_corpus));
      auto c = corpus::build_split(loaded.corpus, manifest);
      write_corpus_file(split_out, c);
      std::cout << corpus::format_stats(corpus::corpus_stats(c)) << "\n";
    } else if (*extract_cmd) {
      auto x = extract(xo);
      write_text(extract_out, xo.mode == "high-res" ? streams::to_jsonl(x->high) : streams::to_jsonl(x->low));
      if (!prompts_out.empty()) {
        auto tmpl = template_path.empty() ? genharness::default_template() : genharness::PromptTemplate::load(template_path);
        std::string text;
        for (const auto& p : prompts_for(*x, tmpl)) {
          nlohmann::json j = {{"student_id", p.example.student_id}, {"problem_id", p.example.problem_id},
                              {"attempt_index", p.example.attempt_index}, {"stage", p.example.stage},
                              {"template_id", p.template_id}, {"system", p.system}, {"user", p.user}};
          text += j.dump() + "\n";
        }
        write_text(prompts_out, text);
      }
      std::cout << (x->low.size() + x->high.size()) << " examples\n";
    } else if (*gen) {
      auto x = extract(go);
      auto tmpl = gen_template.empty() ? genharness::default_template() : genharness::PromptTemplate::load(gen_template);
      auto prompts = prompts_for(*x, tmpl);
      if (dry_run) {
        std::cout << prompts.size() << " prompts (template " << tmpl.template_id << ")\n";
        return 0;
      }
      if (endpoint.url.empty() || endpoint.model.empty()) throw Error("generate needs --url and --model");
      if (const char* key = std::getenv(api_key_env.c_str())) endpoint.api_key = key;
      // Resume: prompts that already have an ok record in the ledger are skipped.
      std::set<std::string> done;
      if (fs::exists(ledger_path))
        for (const auto& r : genharness::Ledger::read(ledger_path))
          if (r.status == genharness::RecordStatus::Ok) done.insert(r.prompt_sha256);
      std::vector<genharness::Prompt> pending;
      for (const auto& p : prompts)
        if (done.count(util::sha256_hex(p.system + "\n\n" + p.user)) == 0) pending.push_back(p);
      std::cout << pending.size() << " of " << prompts.size() << " prompts pending\n";
      genharness::Ledger ledger(ledger_path);
      for (const auto& r : genharness::generate(pending, endpoint, sampling)) ledger.append(r);
      if (!candidate_out.empty()) {
        auto build = genharness::records_to_corpus(genharness::Ledger::read(ledger_path));
        for (const auto& w : build.warnings) std::cerr << "warning: " << w << "\n";
        write_corpus_file(candidate_out, build.corpus);
        std::cout << build.corpus.submission_count() << " candidate submissions, " << build.excluded
                  << " records without code\n";
      }
    } else if (*eval) {
      if (config_path.empty()) throw Error("eval needs --config");
      auto cfg = report::EvalConfig::load(config_path);
      if (!executor_cmd.empty()) cfg.functional.executor.command = util::split_command(executor_cmd);
      if (test_timeout) cfg.functional.executor.test_timeout_s = *test_timeout;
      if (max_workers) cfg.functional.executor.max_workers = *max_workers;
      if (embed_batch) cfg.embedding.batch = *embed_batch;
      if (!coverage_direction.empty())
        cfg.embedding.coverage_direction = embedding::parse_coverage_direction(coverage_direction);
      if (progress_bins) cfg.progress.bins = *progress_bins;
      if (eval_dedup) cfg.dedup_consecutive = true;
      auto r = report::run_evaluation(cfg);
      for (const auto& f : split_formats(formats))
        for (const auto& name : report::render(r, report::parse_format(f), eval_out))
          std::cout << (fs::path(eval_out) / name).string() << "\n";
      for (const auto& n : r.meta.notices) std::cerr << "notice: " << n << "\n";
      std::cout << "digest " << report::digest(r) << "\n";
    } else if (*render) {
      std::ifstream in(report_path, std::ios::binary);
      if (!in) throw Error("cannot read " + report_path);
      std::stringstream ss;
      ss << in.rdbuf();
      auto r = report::from_json(ss.str());
      for (const auto& f : split_formats(render_formats))
        for (const auto& name : report::render(r, report::parse_format(f), render_out))
          std::cout << (fs::path(render_out) / name).string() << "\n";
    } else if (*analyze) {
      auto loaded = corpus::load_corpus(fs::path(analyze_corpus));
      std::vector<analysis::MetricsRow> rows;
      for (const auto& s : loaded.corpus.streams)
        for (const auto& sub : s.submissions)
          rows.push_back({sub.student_id, sub.problem_id, sub.attempt_index, analysis::measure(sub.code)});
      if (analyze_out.empty()) {
        analysis::write_metrics_csv(std::cout, rows);
      } else {
        std::ostringstream out;
        analysis::write_metrics_csv(out, rows);
        write_text(analyze_out, out.str());
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
