#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trajeval/report/report.hpp"
#include "trajeval/util/subprocess.hpp"
#include "trajeval/util/text.hpp"

namespace trajeval::report {

using nlohmann::json;

std::string to_string(Experiment e) { return e == Experiment::LowRes ? "low_res" : "high_res"; }

Experiment parse_experiment(const std::string& text) {
  if (text == "low_res" || text == "low-res") return Experiment::LowRes;
  if (text == "high_res" || text == "high-res") return Experiment::HighRes;
  throw Error("unknown experiment '" + text + "' (expected low_res or high_res)");
}

namespace {

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw Error("config: " + where + " must be an object");
  for (const auto& [k, v] : obj.items())
    if (allowed.count(k) == 0) throw Error("config: unknown key '" + k + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw Error("config: bad value for " + where + "." + key);
  }
}

}  // namespace

EvalConfig EvalConfig::parse(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, "config", {"reference", "candidates", "embedding", "functional", "style", "progress"});
  EvalConfig c;
  c.base_dir = base_dir;

  if (!doc.contains("reference")) throw Error("config: missing 'reference'");
  const json& ref = doc["reference"];
  check_keys(ref, "reference", {"corpus", "problems", "manifest", "dedup_consecutive", "max_malformed_fraction"});
  read(ref, "corpus", c.reference_corpus, "reference");
  read(ref, "problems", c.problems, "reference");
  read(ref, "manifest", c.manifest, "reference");
  read(ref, "dedup_consecutive", c.dedup_consecutive, "reference");
  read(ref, "max_malformed_fraction", c.max_malformed_fraction, "reference");
  if (c.reference_corpus.empty()) throw Error("config: reference.corpus is required");

  if (auto it = doc.find("candidates"); it != doc.end()) {
    if (!it->is_array()) throw Error("config: candidates must be an array");
    std::set<std::tuple<std::string, int, bool>> seen;
    for (const auto& cj : *it) {
      check_keys(cj, "candidates[]", {"name", "experiment", "context", "corpus"});
      CandidateConfig cand;
      std::string exp = "low_res";
      read(cj, "name", cand.name, "candidates[]");
      read(cj, "experiment", exp, "candidates[]");
      read(cj, "context", cand.context, "candidates[]");
      read(cj, "corpus", cand.corpus, "candidates[]");
      cand.experiment = parse_experiment(exp);
      if (cand.name.empty() || cand.corpus.empty()) throw Error("config: every candidate needs a name and a corpus");
      if (cand.name == "Student") throw Error("config: 'Student' is reserved for the reference population");
      if (!seen.emplace(cand.name, static_cast<int>(cand.experiment), cand.context).second)
        throw Error("config: candidate " + cand.name + " appears twice for the same experiment and context");
      c.candidates.push_back(std::move(cand));
    }
  }

  if (auto it = doc.find("embedding"); it != doc.end()) {
    const json& e = *it;
    check_keys(e, "embedding",
               {"enabled", "provider", "file", "url", "provider_id", "token_env", "dim", "batch", "cache_dir",
                "distance", "coverage_direction", "k_distance", "k_coverage", "projection"});
    auto& o = c.embedding;
    read(e, "enabled", o.enabled, "embedding");
    read(e, "provider", o.provider, "embedding");
    read(e, "file", o.file, "embedding");
    read(e, "url", o.url, "embedding");
    read(e, "provider_id", o.provider_id, "embedding");
    read(e, "token_env", o.token_env, "embedding");
    read(e, "dim", o.dim, "embedding");
    read(e, "batch", o.batch, "embedding");
    read(e, "cache_dir", o.cache_dir, "embedding");
    std::string distance = embedding::to_string(o.distance);
    std::string direction = embedding::to_string(o.coverage_direction);
    read(e, "distance", distance, "embedding");
    read(e, "coverage_direction", direction, "embedding");
    o.distance = embedding::parse_distance(distance);
    o.coverage_direction = embedding::parse_coverage_direction(direction);
    read(e, "k_distance", o.k_distance, "embedding");
    read(e, "k_coverage", o.k_coverage, "embedding");
    read(e, "projection", o.projection, "embedding");
    if (o.provider != "precomputed" && o.provider != "http")
      throw Error("config: embedding.provider must be 'precomputed' or 'http'");
    if (o.k_distance < 1 || o.k_coverage < 1) throw Error("config: k values must be at least 1");
    if (o.batch == 0) throw Error("config: embedding.batch must be positive");
  }

  if (auto it = doc.find("functional"); it != doc.end()) {
    const json& f = *it;
    check_keys(f, "functional",
               {"enabled", "student_source", "executor_cmd", "test_timeout_s", "memory_mb", "max_workers"});
    auto& o = c.functional;
    read(f, "enabled", o.enabled, "functional");
    read(f, "student_source", o.student_source, "functional");
    if (o.student_source != "execute" && o.student_source != "grader_text")
      throw Error("config: functional.student_source must be 'execute' or 'grader_text'");
    if (auto cmd = f.find("executor_cmd"); cmd != f.end() && !cmd->is_null()) {
      if (cmd->is_string()) o.executor.command = util::split_command(cmd->get<std::string>());
      else read(f, "executor_cmd", o.executor.command, "functional");
    }
    read(f, "test_timeout_s", o.executor.test_timeout_s, "functional");
    read(f, "memory_mb", o.executor.memory_mb, "functional");
    read(f, "max_workers", o.executor.max_workers, "functional");
    if (!(o.executor.test_timeout_s > 0)) throw Error("config: functional.test_timeout_s must be positive");
  }

  if (auto it = doc.find("style"); it != doc.end()) {
    check_keys(*it, "style", {"enabled"});
    read(*it, "enabled", c.style.enabled, "style");
  }
  if (auto it = doc.find("progress"); it != doc.end()) {
    check_keys(*it, "progress", {"enabled", "bins"});
    read(*it, "enabled", c.progress.enabled, "progress");
    read(*it, "bins", c.progress.bins, "progress");
    if (c.progress.bins < 1) throw Error("config: progress.bins must be at least 1");
  }
  return c;
}

EvalConfig EvalConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

std::filesystem::path EvalConfig::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

std::string EvalConfig::semantic_json() const {
  json j;  // std::map-backed: keys come out sorted
  j["reference"] = {{"corpus", reference_corpus},
                    {"problems", problems},
                    {"manifest", manifest},
                    {"dedup_consecutive", dedup_consecutive}};
  j["candidates"] = json::array();
  for (const auto& c : candidates)
    j["candidates"].push_back(
        {{"name", c.name}, {"experiment", to_string(c.experiment)}, {"context", c.context}, {"corpus", c.corpus}});
  j["embedding"] = {{"enabled", embedding.enabled},
                    {"provider", embedding.provider},
                    {"provider_id", embedding.provider_id},
                    {"file", embedding.file},
                    {"dim", embedding.dim},
                    {"distance", embedding::to_string(embedding.distance)},
                    {"coverage_direction", embedding::to_string(embedding.coverage_direction)},
                    {"k_distance", embedding.k_distance},
                    {"k_coverage", embedding.k_coverage},
                    {"projection", embedding.projection}};
  j["functional"] = {{"enabled", functional.enabled},
                     {"student_source", functional.student_source},
                     {"test_timeout_s", functional.executor.test_timeout_s},
                     {"memory_mb", functional.executor.memory_mb}};
  j["style"] = {{"enabled", style.enabled}};
  j["progress"] = {{"enabled", progress.enabled}, {"bins", progress.bins}};
  return j.dump();
}

std::string EvalConfig::digest() const { return util::sha256_hex(semantic_json()); }

}  // namespace trajeval::report
