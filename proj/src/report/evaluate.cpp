#include <algorithm>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "trajeval/analysis/metrics.hpp"
#include "trajeval/embedding/provider.hpp"
#include "trajeval/report/report.hpp"
#include "trajeval/streams/streams.hpp"
#include "trajeval/util/text.hpp"

#ifndef TRAJEVAL_VERSION
#define TRAJEVAL_VERSION "0.0.0"
#endif

namespace trajeval::report {

using corpus::Corpus;
using corpus::Stream;
using corpus::Submission;
using streams::Stage;

namespace {

constexpr const char* kStudent = "Student";

std::string sub_key(const Submission& s) {
  return s.student_id + "/" + s.problem_id + "/" + std::to_string(s.attempt_index);
}

std::string population_label(const CandidateConfig& c) { return c.name + (c.context ? "/T" : "/F"); }

std::string corpus_sha(const Corpus& c) {
  std::ostringstream out;
  corpus::write_corpus(out, c);
  return util::sha256_hex(out.str());
}

std::string problems_sha(const std::map<std::string, corpus::ProblemSpec>& problems) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [id, p] : problems) {
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& t : p.doctests) tests.push_back({t.input, t.expected});
    j.push_back({{"problem_id", id}, {"statement", p.statement}, {"skeleton_code", p.skeleton_code}, {"doctests", tests}});
  }
  return util::sha256_hex(j.dump());
}

struct Outcome {
  std::optional<functional::ErrorType> type;
  std::optional<double> pass_fraction;
  std::optional<double> full_pass;
};

// A candidate lined up against the reference: pairs[i] = (candidate, student).
struct Pairing {
  const CandidateConfig* config = nullptr;
  Corpus corpus;
  std::map<Stage, std::vector<std::pair<const Submission*, const Submission*>>> by_stage;  // low-res
  std::vector<std::pair<const Submission*, const Submission*>> pairs;                     // high-res
  // high-res: per reference stream, the candidate submission for attempt i
  std::map<corpus::StreamKey, std::vector<const Submission*>> per_stream;
};

const Submission* find_attempt(const Stream* s, int attempt) {
  if (s == nullptr) return nullptr;
  for (const auto& sub : s->submissions)
    if (sub.attempt_index == attempt) return &sub;
  return nullptr;
}

void fail_unmatched(const std::string& name, const std::vector<std::string>& missing,
                    const std::vector<std::string>& extra) {
  std::string msg = "candidate " + name + " does not line up with the reference targets";
  auto list = [&](const char* label, const std::vector<std::string>& keys) {
    if (keys.empty()) return;
    msg += std::string("; ") + label + " (" + std::to_string(keys.size()) + "):";
    for (std::size_t i = 0; i < keys.size() && i < 20; ++i) msg += " " + keys[i];
    if (keys.size() > 20) msg += " ...";
  };
  list("missing", missing);
  list("unexpected", extra);
  throw Error(msg);
}

Pairing pair_candidate(const CandidateConfig& cfg, Corpus cand, const Corpus& ref) {
  Pairing p;
  p.config = &cfg;
  p.corpus = std::move(cand);
  std::set<const Submission*> used;
  std::vector<std::string> missing;
  for (const auto& stream : ref.streams) {
    const Stream* cs = p.corpus.find(stream.key());
    int n = static_cast<int>(stream.size());
    if (cfg.experiment == Experiment::LowRes) {
      auto idx = streams::stage_indices(n);
      for (Stage st : streams::kStages) {
        int a = idx.at(st);
        const Submission* c = find_attempt(cs, a);
        if (c == nullptr) {
          missing.push_back(stream.student_id + "/" + stream.problem_id + "/" + std::to_string(a));
          continue;
        }
        used.insert(c);
        p.by_stage[st].emplace_back(c, &stream.submissions[a]);
      }
    } else {
      auto& slots = p.per_stream[stream.key()];
      slots.assign(stream.size(), nullptr);
      for (int a = 1; a < n; ++a) {
        const Submission* c = find_attempt(cs, a);
        if (c == nullptr) {
          missing.push_back(stream.student_id + "/" + stream.problem_id + "/" + std::to_string(a));
          continue;
        }
        used.insert(c);
        slots[a] = c;
        p.pairs.emplace_back(c, &stream.submissions[a]);
      }
    }
  }
  std::vector<std::string> extra;
  for (const auto& s : p.corpus.streams)
    for (const auto& sub : s.submissions)
      if (used.count(&sub) == 0) extra.push_back(sub_key(sub));
  // Duplicated low-res targets (short streams) are fine; anything unused is not.
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  if (!missing.empty() || !extra.empty()) fail_unmatched(cfg.name, missing, extra);
  return p;
}

template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
  unsigned workers = std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), 8u);
  if (n < 64) workers = 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

class Evaluation {
 public:
  explicit Evaluation(const EvalConfig& cfg) : cfg_(cfg) {}

  Report run() {
    load();
    collect();
    if (cfg_.style.enabled) analyze_style();
    else notice("style: disabled");
    if (cfg_.functional.enabled) guarded("functional", [&] { analyze_functional(); });
    else notice("functional: disabled");
    if (cfg_.embedding.enabled) guarded("embedding", [&] { analyze_embeddings(); });
    else notice("embedding: disabled");

    bool any_low = std::any_of(pairings_.begin(), pairings_.end(),
                               [](const Pairing& p) { return p.config->experiment == Experiment::LowRes; });
    bool any_high = std::any_of(pairings_.begin(), pairings_.end(),
                                [](const Pairing& p) { return p.config->experiment == Experiment::HighRes; });
    if (any_low) {
      if (has_embeddings_) guarded("table1", [&] { build_table1(); });
      if (cfg_.style.enabled) build_table2();
      if (has_embeddings_ && cfg_.embedding.projection) guarded("embed2d", [&] { build_projection_low(); });
    } else {
      notice("table1, table2: no low-resolution candidates configured");
    }
    if (any_high) {
      build_table3();
      if (cfg_.progress.enabled) build_progress();
      else notice("progress: disabled");
      if (has_embeddings_ && cfg_.embedding.projection && !any_low)
        guarded("embed2d", [&] { build_projection_high(); });
    } else {
      notice("table3, progress: no high-resolution candidates configured");
    }
    if (has_functional_) build_error_distributions(any_low, any_high);
    finish_metadata();
    return std::move(report_);
  }

 private:
  // ---- loading -------------------------------------------------------------

  void load() {
    corpus::LoadOptions opts;
    opts.dedup_consecutive = cfg_.dedup_consecutive;
    opts.max_malformed_fraction = cfg_.max_malformed_fraction;
    auto loaded = corpus::load_corpus(cfg_.resolve(cfg_.reference_corpus), opts);
    if (!loaded.malformed.empty())
      notice("reference corpus: skipped " + std::to_string(loaded.malformed.size()) + " malformed record(s)");
    full_ref_ = std::move(loaded.corpus);
    if (!cfg_.problems.empty())
      for (auto& p : corpus::load_problems(cfg_.resolve(cfg_.problems))) full_ref_.problems[p.problem_id] = p;
    report_.meta.corpora.push_back({kStudent, "", std::nullopt, corpus_sha(full_ref_), full_ref_.submission_count()});
    if (!cfg_.manifest.empty()) {
      auto manifest = corpus::load_manifest(cfg_.resolve(cfg_.manifest));
      ref_ = corpus::build_split(full_ref_, manifest);
      report_.meta.split = corpus::to_string(manifest.name);
    } else {
      ref_ = full_ref_;
      report_.meta.split = "all";
    }
    if (ref_.streams.empty()) throw Error("reference split has no streams");
    report_.meta.settings["problems_sha256"] = problems_sha(full_ref_.problems);

    for (const auto& c : cfg_.candidates) {
      corpus::LoadOptions copts;
      copts.max_malformed_fraction = 0.0;
      auto cl = corpus::load_corpus(cfg_.resolve(c.corpus), copts);
      report_.meta.corpora.push_back(
          {c.name, to_string(c.experiment), c.context, corpus_sha(cl.corpus), cl.corpus.submission_count()});
      pairings_.push_back(pair_candidate(c, std::move(cl.corpus), ref_));
    }
  }

  // Every submission that any section looks at, each once.
  void collect() {
    bool any_high = std::any_of(cfg_.candidates.begin(), cfg_.candidates.end(),
                                [](const CandidateConfig& c) { return c.experiment == Experiment::HighRes; });
    for (const auto& s : ref_.streams) {
      if (any_high) {
        for (const auto& sub : s.submissions) add(&sub, kStudent);
      } else {
        auto idx = streams::stage_indices(static_cast<int>(s.size()));
        for (Stage st : streams::kStages) add(&s.submissions[idx.at(st)], kStudent);
      }
    }
    for (const auto& p : pairings_)
      for (const auto& s : p.corpus.streams)
        for (const auto& sub : s.submissions) add(&sub, population_label(*p.config));
  }

  void add(const Submission* s, const std::string& population) {
    if (index_.emplace(s, subs_.size()).second) {
      subs_.push_back(s);
      population_.push_back(population);
    }
  }

  bool is_student(std::size_t i) const { return population_[i] == kStudent; }

  std::size_t idx(const Submission* s) const { return index_.at(s); }

  // ---- per-submission analysis -----------------------------------------------

  void analyze_style() {
    metrics_.resize(subs_.size());
    parallel_for(subs_.size(), [&](std::size_t i) { metrics_[i] = analysis::measure(subs_[i]->code); });
    std::vector<analysis::CodeMetrics> reference;
    for (const auto& s : ref_.streams)
      for (const auto& sub : s.submissions)
        reference.push_back(index_.count(&sub) ? metrics_[idx(&sub)] : analysis::measure(sub.code));
    std::vector<std::string> warnings;
    model_ = stats::fit_style_model(reference, &warnings);
    for (auto& w : warnings) notice(w);
    scores_.resize(subs_.size());
    for (std::size_t i = 0; i < subs_.size(); ++i) scores_[i] = stats::style_score(*model_, metrics_[i]);
    report_.meta.style_model = model_;
    report_.meta.settings["style_model.population"] =
        "reference split, all attempts (" + std::to_string(model_->fitted_on) + " parseable of " +
        std::to_string(reference.size()) + ")";
    std::map<std::string, std::size_t> unparsed;
    for (std::size_t i = 0; i < subs_.size(); ++i)
      if (!metrics_[i].parse_ok) ++unparsed[population_of(i)];
    for (const auto& [pop, n] : unparsed) report_.meta.exclusions.push_back({pop, "style_score", "parse failure", n});
  }

  void analyze_functional() {
    outcomes_.assign(subs_.size(), Outcome{});
    std::vector<functional::ExecutionJob> jobs;
    std::vector<std::pair<std::size_t, std::size_t>> job_index;  // (submission, job)
    std::map<std::pair<std::string, std::string>, std::size_t> job_of;
    std::map<std::string, std::size_t> no_tests, unknown;
    for (std::size_t i = 0; i < subs_.size(); ++i) {
      const Submission* s = subs_[i];
      if (is_student(i) && cfg_.functional.student_source == "grader_text" && s->grader_output) {
        auto type = functional::classify_from_grader_text(*s->grader_output);
        if (!type) {
          ++unknown[population_of(i)];
          continue;
        }
        outcomes_[i].type = type;
        outcomes_[i].full_pass = *type == functional::ErrorType::NoError ? 1.0 : 0.0;
        continue;
      }
      const corpus::ProblemSpec* problem = ref_.problem(s->problem_id);
      if (problem == nullptr || problem->doctests.empty()) {
        ++no_tests[population_of(i)];
        continue;
      }
      // Identical code on the same problem runs once.
      auto [it, fresh] = job_of.try_emplace({s->problem_id, s->code}, jobs.size());
      if (fresh) jobs.push_back({&s->code, problem});
      job_index.emplace_back(i, it->second);
    }
    if (!jobs.empty()) functional::check_executor(cfg_.functional.executor);
    auto results = functional::classify_all(jobs, cfg_.functional.executor);
    for (const auto& [i, j] : job_index) {
      Outcome& o = outcomes_[i];
      o.type = results[j].error_type;
      o.pass_fraction = results[j].pass_fraction;
      o.full_pass = results[j].full_pass ? 1.0 : 0.0;
    }
    for (const auto& [pop, n] : no_tests) report_.meta.exclusions.push_back({pop, "functional", "no doctests", n});
    for (const auto& [pop, n] : unknown)
      report_.meta.exclusions.push_back({pop, "functional", "unrecognized grader output", n});
    has_functional_ = true;
  }

  void analyze_embeddings() {
    std::unique_ptr<embedding::Provider> provider;
    const auto& e = cfg_.embedding;
    if (e.provider == "precomputed") {
      if (e.file.empty()) throw Error("embedding.file is required for the precomputed provider");
      provider = std::make_unique<embedding::PrecomputedProvider>(embedding::VectorStore::load(cfg_.resolve(e.file)));
    } else {
      embedding::HttpProviderConfig hc;
      hc.url = e.url;
      hc.provider_id = e.provider_id;
      if (!e.token_env.empty())
        if (const char* tok = std::getenv(e.token_env.c_str())) hc.token = tok;
      provider = std::make_unique<embedding::HttpProvider>(hc);
    }
    embedding::EmbedOptions opts;
    opts.dim = e.dim;
    opts.batch_size = e.batch;
    opts.normalize = true;
    if (!e.cache_dir.empty()) opts.cache_dir = cfg_.resolve(e.cache_dir);
    std::vector<std::string> codes, keys;
    for (const Submission* s : subs_) {
      codes.push_back(s->code);
      keys.push_back(sub_key(*s));
    }
    vectors_ = embedding::embed(codes, keys, *provider, opts);
    report_.meta.settings["embedding.provider_id"] = vectors_.provider_id;
    report_.meta.settings["embedding.dim"] = std::to_string(vectors_.dim());
    has_embeddings_ = true;
  }

  // ---- sections --------------------------------------------------------------

  embedding::EmbeddingSet subset(const std::vector<const Submission*>& subs) const {
    embedding::EmbeddingSet out;
    out.provider_id = vectors_.provider_id;
    out.normalized = vectors_.normalized;
    out.matrix.resize(static_cast<Eigen::Index>(subs.size()), vectors_.dim());
    for (std::size_t r = 0; r < subs.size(); ++r) {
      out.matrix.row(static_cast<Eigen::Index>(r)) = vectors_.matrix.row(static_cast<Eigen::Index>(idx(subs[r])));
      out.keys.push_back(sub_key(*subs[r]));
    }
    return out;
  }

  std::vector<const Submission*> student_stage(Stage st) const {
    std::vector<const Submission*> out;
    for (const auto& s : ref_.streams)
      out.push_back(&s.submissions[streams::stage_indices(static_cast<int>(s.size())).at(st)]);
    return out;
  }

  static std::vector<const Submission*> firsts(const std::vector<std::pair<const Submission*, const Submission*>>& v) {
    std::vector<const Submission*> out;
    for (const auto& p : v) out.push_back(p.first);
    return out;
  }

  // Candidates of one experiment ordered context F before T, then config order.
  std::vector<const Pairing*> ordered(Experiment e) const {
    std::vector<const Pairing*> out;
    for (bool ctx : {false, true})
      for (const auto& p : pairings_)
        if (p.config->experiment == e && p.config->context == ctx) out.push_back(&p);
    return out;
  }

  void build_table1() {
    std::vector<Table1Row> rows;
    for (Stage st : streams::kStages) {
      auto students = subset(student_stage(st));
      for (const Pairing* p : ordered(Experiment::LowRes)) {
        auto generated = subset(firsts(p->by_stage.at(st)));
        Table1Row r;
        r.model = p->config->name;
        r.stage = std::string(streams::to_string(st));
        r.context = p->config->context;
        r.knn_distance = embedding::knn_distance(students, generated, cfg_.embedding.k_distance, cfg_.embedding.distance);
        r.knn_coverage = embedding::knn_coverage(students, generated, cfg_.embedding.k_coverage, cfg_.embedding.distance,
                                                 cfg_.embedding.coverage_direction);
        r.n_students = static_cast<std::size_t>(students.rows());
        r.n_generated = static_cast<std::size_t>(generated.rows());
        rows.push_back(std::move(r));
      }
    }
    report_.table1 = std::move(rows);
  }

  std::optional<double> violations(const Submission* s) const {
    return static_cast<double>(metrics_[idx(s)].violations);
  }
  std::optional<double> score(const Submission* s) const { return scores_[idx(s)]; }

  template <typename Getter>
  stats::Summary summary(const std::vector<const Submission*>& subs, Getter get) const {
    std::vector<std::optional<double>> v;
    for (const Submission* s : subs) v.push_back(get(s));
    return stats::summarize(v);
  }

  template <typename Getter>
  std::optional<MaeCell> mae(const std::vector<std::pair<const Submission*, const Submission*>>& pairs,
                             Getter get) const {
    std::vector<std::pair<std::optional<double>, std::optional<double>>> v;
    for (const auto& [c, s] : pairs) v.emplace_back(get(c), get(s));
    std::size_t defined = 0;
    for (const auto& [a, b] : v) defined += (a && b) ? 1 : 0;
    if (defined == 0) return std::nullopt;
    auto m = stats::pairwise_mae(v);
    return MaeCell{m.value, m.pairs, m.skipped};
  }

  void build_table2() {
    auto viol = [&](const Submission* s) { return violations(s); };
    auto sc = [&](const Submission* s) { return score(s); };
    std::vector<Table2Row> rows;
    for (Stage st : streams::kStages) {
      std::string stage(streams::to_string(st));
      for (const Pairing* p : ordered(Experiment::LowRes)) {
        const auto& pairs = p->by_stage.at(st);
        auto cands = firsts(pairs);
        rows.push_back({p->config->name, stage, p->config->context, summary(cands, viol), mae(pairs, viol),
                        summary(cands, sc), mae(pairs, sc)});
      }
      auto students = student_stage(st);
      rows.push_back({kStudent, stage, std::nullopt, summary(students, viol), std::nullopt, summary(students, sc),
                      std::nullopt});
    }
    report_.table2 = std::move(rows);
  }

  std::vector<const Submission*> student_targets_high() const {
    std::vector<const Submission*> out;
    for (const auto& s : ref_.streams)
      for (std::size_t a = 1; a < s.size(); ++a) out.push_back(&s.submissions[a]);
    return out;
  }

  void build_table3() {
    auto pass = [&](const Submission* s) -> std::optional<double> {
      return has_functional_ ? outcomes_[idx(s)].full_pass : std::nullopt;
    };
    auto viol = [&](const Submission* s) -> std::optional<double> {
      return cfg_.style.enabled ? violations(s) : std::nullopt;
    };
    auto sc = [&](const Submission* s) -> std::optional<double> {
      return cfg_.style.enabled ? score(s) : std::nullopt;
    };
    std::vector<Table3Row> rows;
    for (const Pairing* p : ordered(Experiment::HighRes)) {
      Table3Row r;
      r.model = p->config->name;
      r.context = p->config->context;
      auto cands = firsts(p->pairs);
      r.pass_rate = summary(cands, pass);
      r.pass_rate_mae = mae(p->pairs, pass);
      r.violations = summary(cands, viol);
      r.violations_mae = mae(p->pairs, viol);
      r.style = summary(cands, sc);
      r.style_mae = mae(p->pairs, sc);
      if (has_embeddings_ && !p->pairs.empty()) {
        double sum = 0.0;
        for (const auto& [c, s] : p->pairs)
          sum += 1.0 - embedding::cosine_similarity(vectors_.matrix.row(static_cast<Eigen::Index>(idx(c))),
                                                    vectors_.matrix.row(static_cast<Eigen::Index>(idx(s))));
        r.cosine_distance = MaeCell{sum / static_cast<double>(p->pairs.size()), p->pairs.size(), 0};
      }
      rows.push_back(std::move(r));
    }
    auto students = student_targets_high();
    Table3Row s;
    s.model = kStudent;
    s.pass_rate = summary(students, pass);
    s.violations = summary(students, viol);
    s.style = summary(students, sc);
    rows.push_back(std::move(s));
    report_.table3 = std::move(rows);
  }

  void build_progress() {
    std::vector<ProgressRow> rows;
    const int bins = cfg_.progress.bins;
    using Values = std::vector<std::vector<std::optional<double>>>;
    struct Metric {
      std::string name;
      std::function<std::optional<double>(const Submission*)> get;
    };
    std::vector<Metric> metrics;
    if (has_functional_) {
      metrics.push_back({"pass_fraction", [&](const Submission* s) { return outcomes_[idx(s)].pass_fraction; }});
      metrics.push_back({"full_pass", [&](const Submission* s) { return outcomes_[idx(s)].full_pass; }});
    }
    if (cfg_.style.enabled) metrics.push_back({"style_score", [&](const Submission* s) { return score(s); }});

    for (const auto& m : metrics) {
      Values student;
      for (const auto& s : ref_.streams) {
        auto& v = student.emplace_back();
        for (const auto& sub : s.submissions) v.push_back(m.get(&sub));
      }
      rows.push_back({kStudent, std::nullopt, stats::progress_curve(student, bins, m.name)});
      for (const Pairing* p : ordered(Experiment::HighRes)) {
        Values cand;
        for (const auto& s : ref_.streams) {
          auto& v = cand.emplace_back(s.size());
          const auto& slots = p->per_stream.at(s.key());
          for (std::size_t a = 1; a < s.size(); ++a) v[a] = m.get(slots[a]);
        }
        rows.push_back({p->config->name, p->config->context, stats::progress_curve(cand, bins, m.name)});
      }
    }

    // Edit distance: students between consecutive attempts; candidates from
    // the student's previous attempt to the generated one.
    std::vector<const Stream*> ptrs;
    for (const auto& s : ref_.streams) ptrs.push_back(&s);
    rows.push_back({kStudent, std::nullopt, stats::edit_distance_curve(ptrs, bins)});
    for (const Pairing* p : ordered(Experiment::HighRes)) {
      Values cand;
      for (const auto& s : ref_.streams) {
        auto& v = cand.emplace_back(s.size());
        const auto& slots = p->per_stream.at(s.key());
        for (std::size_t a = 1; a < s.size(); ++a)
          v[a] = static_cast<double>(stats::levenshtein(s.submissions[a - 1].code, slots[a]->code));
      }
      rows.push_back({p->config->name, p->config->context, stats::progress_curve(cand, bins, "edit_distance")});
    }
    report_.progress = std::move(rows);
  }

  void build_error_distributions(bool any_low, bool any_high) {
    std::vector<ErrorDistRow> rows;
    std::vector<std::string> warnings;
    auto add_group = [&](const std::string& pop, const std::string& stage, std::optional<bool> ctx,
                         const std::vector<const Submission*>& subs) {
      std::vector<functional::LabelledOutcome> outs;
      std::string group = pop + (ctx ? (*ctx ? "/T" : "/F") : "") + (stage.empty() ? "" : "/" + stage);
      for (const Submission* s : subs) outs.push_back({group, outcomes_[idx(s)].type});
      auto dist = functional::error_distribution(outs, &warnings);
      for (auto& d : dist) rows.push_back({pop, stage, ctx, std::move(d)});
    };
    if (any_low) {
      for (Stage st : streams::kStages) {
        std::string stage(streams::to_string(st));
        add_group(kStudent, stage, std::nullopt, student_stage(st));
        for (const Pairing* p : ordered(Experiment::LowRes))
          add_group(p->config->name, stage, p->config->context, firsts(p->by_stage.at(st)));
      }
    }
    if (any_high) {
      add_group(kStudent, "", std::nullopt, student_targets_high());
      for (const Pairing* p : ordered(Experiment::HighRes))
        add_group(p->config->name, "", p->config->context, firsts(p->pairs));
    }
    for (auto& w : warnings) notice(w);
    report_.error_distributions = std::move(rows);
  }

  ProjectionBlock project(const std::string& stage, const std::vector<std::string>& pops,
                          const std::vector<std::vector<const Submission*>>& groups) {
    std::vector<embedding::EmbeddingSet> sets;
    for (const auto& g : groups) sets.push_back(subset(g));
    std::vector<const embedding::EmbeddingSet*> ptrs;
    for (const auto& s : sets) ptrs.push_back(&s);
    auto proj = embedding::project_2d(ptrs);
    ProjectionBlock b;
    b.stage = stage;
    b.explained = {proj.explained[0], proj.explained[1]};
    Eigen::Index r = 0;
    for (std::size_t g = 0; g < sets.size(); ++g)
      for (const auto& key : sets[g].keys) {
        b.points.push_back({key, pops[g], proj.coords(r, 0), proj.coords(r, 1)});
        ++r;
      }
    return b;
  }

  void build_projection_low() {
    std::vector<ProjectionBlock> blocks;
    for (Stage st : streams::kStages) {
      std::vector<std::string> pops = {kStudent};
      std::vector<std::vector<const Submission*>> groups = {student_stage(st)};
      for (const Pairing* p : ordered(Experiment::LowRes)) {
        pops.push_back(population_label(*p->config));
        groups.push_back(firsts(p->by_stage.at(st)));
      }
      blocks.push_back(project(std::string(streams::to_string(st)), pops, groups));
    }
    report_.embed2d = std::move(blocks);
  }

  void build_projection_high() {
    std::vector<std::string> pops = {kStudent};
    std::vector<std::vector<const Submission*>> groups = {student_targets_high()};
    for (const Pairing* p : ordered(Experiment::HighRes)) {
      pops.push_back(population_label(*p->config));
      groups.push_back(firsts(p->pairs));
    }
    report_.embed2d = std::vector<ProjectionBlock>{project("", pops, groups)};
  }

  // ---- bookkeeping -------------------------------------------------------------

  const std::string& population_of(std::size_t i) const { return population_[i]; }

  template <typename Fn>
  void guarded(const std::string& section, Fn fn) {
    try {
      fn();
    } catch (const Error& e) {
      notice(section + ": omitted: " + e.what());
    }
  }

  void notice(std::string text) { report_.meta.notices.push_back(std::move(text)); }

  void finish_metadata() {
    auto& m = report_.meta;
    m.tool_version = TRAJEVAL_VERSION;
    m.config_digest = cfg_.digest();
    m.settings["knn.k_distance"] = std::to_string(cfg_.embedding.k_distance);
    m.settings["knn.k_coverage"] = std::to_string(cfg_.embedding.k_coverage);
    m.settings["knn.distance"] = embedding::to_string(cfg_.embedding.distance);
    m.settings["knn.coverage_direction"] = embedding::to_string(cfg_.embedding.coverage_direction);
    m.settings["progress.bins"] = std::to_string(cfg_.progress.bins);
    m.settings["functional.student_source"] = cfg_.functional.student_source;
    m.settings["functional.test_timeout_s"] = fmt_fixed(cfg_.functional.executor.test_timeout_s, 3);
    m.interpretations["coverage"] =
        cfg_.embedding.coverage_direction == embedding::CoverageDirection::GeneratedToStudents
            ? "share of student rows inside the union of the generated rows' k-nearest student neighborhoods"
            : "share of generated rows inside the union of the student rows' k-nearest generated neighborhoods";
    m.interpretations["table3.cosine_distance"] = "mean cosine distance between each generated submission and its paired student submission";
    m.interpretations["table3.pass_rate"] = "mean (std) of the all-tests-pass indicator; mean in percent, std and MAE as fractions";
    m.interpretations["style_model"] = "fitted once on the reference population and applied to every population";
    m.interpretations["progress.edit_distance"] = "students: consecutive attempts; generated: the student's previous attempt to the generated attempt";
    m.interpretations["progress.pass"] = "both pass_fraction and full_pass curves are reported";
    std::sort(m.exclusions.begin(), m.exclusions.end(), [](const Exclusion& a, const Exclusion& b) {
      return std::tie(a.population, a.metric, a.reason) < std::tie(b.population, b.metric, b.reason);
    });
  }

  const EvalConfig& cfg_;
  Report report_;
  Corpus full_ref_;
  Corpus ref_;
  std::vector<Pairing> pairings_;
  std::vector<const Submission*> subs_;
  std::vector<std::string> population_;
  std::unordered_map<const Submission*, std::size_t> index_;
  std::vector<analysis::CodeMetrics> metrics_;
  std::vector<std::optional<double>> scores_;
  std::optional<stats::StyleScoreModel> model_;
  std::vector<Outcome> outcomes_;
  embedding::EmbeddingSet vectors_;
  bool has_functional_ = false;
  bool has_embeddings_ = false;
};

}  // namespace

Report run_evaluation(const EvalConfig& config) { return Evaluation(config).run(); }

}  // namespace trajeval::report
