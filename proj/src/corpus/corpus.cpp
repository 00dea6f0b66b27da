#include "trajeval/corpus/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace trajeval::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

const Stream* Corpus::find(const StreamKey& key) const {
  auto it = std::lower_bound(streams.begin(), streams.end(), key,
                             [](const Stream& s, const StreamKey& k) { return s.key() < k; });
  if (it == streams.end() || it->key() != key) return nullptr;
  return &*it;
}

const ProblemSpec* Corpus::problem(const std::string& problem_id) const {
  auto it = problems.find(problem_id);
  return it == problems.end() ? nullptr : &it->second;
}

std::size_t Corpus::submission_count() const {
  std::size_t n = 0;
  for (const auto& s : streams) n += s.size();
  return n;
}

namespace {

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string::npos;
}

const json& require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw Error(std::string("missing field '") + field + "'");
  return *it;
}

std::string require_string(const json& obj, const char* field, bool non_empty) {
  const json& v = require(obj, field);
  if (!v.is_string()) throw Error(std::string("field '") + field + "' must be a string");
  std::string s = v.get<std::string>();
  if (non_empty && s.empty()) throw Error(std::string("field '") + field + "' is empty");
  return s;
}

struct ParsedRecord {
  Submission submission;
  bool has_index = false;
};

ParsedRecord parse_record(const std::string& line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw Error("record is not a JSON object");
  if (obj.contains("email")) throw Error("record contains an email field");
  ParsedRecord rec;
  Submission& s = rec.submission;
  s.student_id = require_string(obj, "student_id", true);
  s.problem_id = require_string(obj, "problem_id", true);
  s.semester = require_string(obj, "semester", false);
  const json& ts = require(obj, "timestamp_ms");
  if (!ts.is_number_integer()) throw Error("field 'timestamp_ms' must be an integer");
  s.timestamp_ms = ts.get<std::int64_t>();
  s.code = require_string(obj, "code", false);
  if (blank(s.code)) throw Error("field 'code' is empty");
  if (auto it = obj.find("grader_output"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw Error("field 'grader_output' must be a string");
    s.grader_output = it->get<std::string>();
  }
  if (auto it = obj.find("attempt_index"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
      throw Error("field 'attempt_index' must be a nonnegative integer");
    s.attempt_index = it->get<int>();
    rec.has_index = true;
  }
  return rec;
}

}  // namespace

std::vector<Stream> build_streams(std::vector<Submission> submissions, bool explicit_indices,
                                  bool dedup_consecutive, std::size_t* dropped) {
  std::map<StreamKey, std::vector<Submission>> groups;
  for (auto& s : submissions) groups[{s.student_id, s.problem_id}].push_back(std::move(s));
  std::vector<Stream> streams;
  streams.reserve(groups.size());
  for (auto& [key, subs] : groups) {
    if (explicit_indices) {
      std::stable_sort(subs.begin(), subs.end(),
                       [](const Submission& a, const Submission& b) { return a.attempt_index < b.attempt_index; });
      for (std::size_t i = 1; i < subs.size(); ++i) {
        if (subs[i].attempt_index == subs[i - 1].attempt_index)
          throw Error("duplicate attempt_index " + std::to_string(subs[i].attempt_index) + " for (" +
                      key.student_id + ", " + key.problem_id + ")");
      }
    } else {
      std::stable_sort(subs.begin(), subs.end(),
                       [](const Submission& a, const Submission& b) { return a.timestamp_ms < b.timestamp_ms; });
      if (dedup_consecutive) {
        std::vector<Submission> kept;
        for (auto& s : subs) {
          if (!kept.empty() && kept.back().code == s.code) {
            if (dropped != nullptr) ++*dropped;
            continue;
          }
          kept.push_back(std::move(s));
        }
        subs = std::move(kept);
      }
      for (std::size_t i = 0; i < subs.size(); ++i) subs[i].attempt_index = static_cast<int>(i);
    }
    Stream stream;
    stream.student_id = key.student_id;
    stream.problem_id = key.problem_id;
    stream.semester = subs.front().semester;
    stream.explicit_attempt_index = explicit_indices;
    stream.submissions = std::move(subs);
    streams.push_back(std::move(stream));
  }
  return streams;
}

LoadResult load_corpus(std::istream& in, const LoadOptions& options) {
  LoadResult result;
  std::string line;
  std::size_t line_number = 0;
  bool have_header = false;
  std::optional<bool> explicit_indices;
  std::vector<Submission> submissions;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    if (!have_header) {
      json header;
      try {
        header = json::parse(line);
      } catch (const json::parse_error&) {
        throw Error("corpus header is not valid JSON");
      }
      if (!header.is_object() || !header.contains("schema") || !header["schema"].is_string())
        throw Error("corpus header must be {\"schema\": \"" + options.schema_version + "\"}");
      std::string found = header["schema"].get<std::string>();
      if (found != options.schema_version)
        throw Error("schema version mismatch: expected " + options.schema_version + ", found " + found);
      have_header = true;
      continue;
    }
    ++result.records;
    try {
      ParsedRecord rec = parse_record(line);
      if (!explicit_indices) explicit_indices = rec.has_index;
      if (*explicit_indices != rec.has_index)
        throw Error("attempt_index must be given on every record or on none");
      submissions.push_back(std::move(rec.submission));
    } catch (const Error& e) {
      result.malformed.push_back({line_number, e.what()});
    }
  }
  if (in.bad()) throw Error("failed reading corpus");
  if (result.records > 0) {
    double fraction = static_cast<double>(result.malformed.size()) / static_cast<double>(result.records);
    if (fraction > options.max_malformed_fraction) {
      std::ostringstream msg;
      msg << result.malformed.size() << " of " << result.records << " records are malformed";
      for (std::size_t i = 0; i < std::min<std::size_t>(3, result.malformed.size()); ++i)
        msg << "; line " << result.malformed[i].line_number << ": " << result.malformed[i].reason;
      throw Error(msg.str());
    }
  }
  result.corpus.streams = build_streams(std::move(submissions), explicit_indices.value_or(false),
                                        options.dedup_consecutive, &result.dedup_dropped);
  return result;
}

LoadResult load_corpus(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read corpus file " + path.string());
  return load_corpus(in, options);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  ordered_json header;
  header["schema"] = kSchemaVersion;
  out << header.dump() << '\n';
  for (const auto& stream : corpus.streams) {
    for (const auto& s : stream.submissions) {
      ordered_json rec;
      rec["student_id"] = s.student_id;
      rec["problem_id"] = s.problem_id;
      rec["semester"] = s.semester;
      rec["timestamp_ms"] = s.timestamp_ms;
      rec["code"] = s.code;
      if (s.grader_output) rec["grader_output"] = *s.grader_output;
      if (stream.explicit_attempt_index) rec["attempt_index"] = s.attempt_index;
      out << rec.dump() << '\n';
    }
  }
}

// ---- problems ------------------------------------------------------------

namespace {

ProblemSpec parse_problem(const json& doc) {
  if (!doc.is_object()) throw Error("problem entry is not a JSON object");
  ProblemSpec p;
  p.problem_id = require_string(doc, "problem_id", true);
  if (doc.contains("statement")) p.statement = require_string(doc, "statement", false);
  if (doc.contains("skeleton_code")) p.skeleton_code = require_string(doc, "skeleton_code", false);
  if (auto it = doc.find("doctests"); it != doc.end()) {
    if (!it->is_array()) throw Error("problem " + p.problem_id + ": doctests must be an array");
    for (const auto& t : *it) {
      p.doctests.push_back({require_string(t, "input", true), require_string(t, "expected", false)});
    }
  }
  return p;
}

std::vector<ProblemSpec> load_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read problem file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("problem file " + path.string() + ": " + e.what());
  }
  std::vector<ProblemSpec> out;
  if (doc.is_array()) {
    for (const auto& d : doc) out.push_back(parse_problem(d));
  } else {
    out.push_back(parse_problem(doc));
  }
  return out;
}

}  // namespace

std::vector<ProblemSpec> load_problems(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) return load_problem_file(path);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ProblemSpec> out;
  for (const auto& f : files) {
    auto part = load_problem_file(f);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// ---- splits ----------------------------------------------------------------

std::string to_string(SplitName name) {
  switch (name) {
    case SplitName::Train:
      return "train";
    case SplitName::TestNsOp:
      return "test_NS_OP";
    case SplitName::TestNsNp:
      return "test_NS_NP";
    case SplitName::Custom:
      return "custom";
  }
  return "custom";
}

SplitName parse_split_name(const std::string& text) {
  if (text == "train") return SplitName::Train;
  if (text == "test_NS_OP") return SplitName::TestNsOp;
  if (text == "test_NS_NP") return SplitName::TestNsNp;
  if (text == "custom") return SplitName::Custom;
  throw Error("unknown split name '" + text + "'");
}

SplitManifest parse_manifest(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("manifest: ") + e.what());
  }
  if (!doc.is_object()) throw Error("manifest must be a JSON object");
  SplitManifest m;
  m.name = parse_split_name(require_string(doc, "name", true));
  const json& keys = require(doc, "keys");
  if (!keys.is_array()) throw Error("manifest keys must be an array");
  for (const auto& k : keys) {
    if (!k.is_array() || k.size() != 3 || !k[0].is_string() || !k[1].is_string() || !k[2].is_string())
      throw Error("manifest key must be [student_id, problem_id, semester]");
    m.keys.push_back({k[0].get<std::string>(), k[1].get<std::string>(), k[2].get<std::string>()});
  }
  return m;
}

SplitManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

std::string manifest_to_json(const SplitManifest& manifest) {
  ordered_json doc;
  doc["name"] = to_string(manifest.name);
  doc["keys"] = ordered_json::array();
  for (const auto& k : manifest.keys) doc["keys"].push_back({k.student_id, k.problem_id, k.semester});
  return doc.dump(2) + "\n";
}

Corpus build_split(const Corpus& corpus, const SplitManifest& manifest) {
  std::set<ManifestKey> keys(manifest.keys.begin(), manifest.keys.end());
  Corpus out;
  out.problems = corpus.problems;
  std::vector<std::string> missing;
  for (const auto& k : keys) {
    const Stream* s = corpus.find({k.student_id, k.problem_id});
    if (s == nullptr || s->semester != k.semester) {
      missing.push_back("(" + k.student_id + ", " + k.problem_id + ", " + k.semester + ")");
      continue;
    }
    out.streams.push_back(*s);
  }
  if (!missing.empty()) {
    std::string msg = "manifest keys not found in corpus:";
    for (const auto& m : missing) msg += " " + m;
    throw Error(msg);
  }
  std::sort(out.streams.begin(), out.streams.end(),
            [](const Stream& a, const Stream& b) { return a.key() < b.key(); });
  return out;
}

void check_disjoint(const SplitManifest& a, const SplitManifest& b) {
  std::set<ManifestKey> left(a.keys.begin(), a.keys.end());
  for (const auto& k : b.keys) {
    if (left.count(k) != 0)
      throw Error("splits " + to_string(a.name) + " and " + to_string(b.name) + " share key (" + k.student_id +
                  ", " + k.problem_id + ", " + k.semester + ")");
  }
}

// ---- statistics --------------------------------------------------------------

CorpusStats corpus_stats(const Corpus& corpus) {
  std::set<std::string> students;
  std::set<std::string> problems;
  CorpusStats stats;
  for (const auto& s : corpus.streams) {
    students.insert(s.student_id);
    problems.insert(s.problem_id);
    stats.submissions += s.size();
  }
  stats.students = students.size();
  stats.problems = problems.size();
  stats.streams = corpus.streams.size();
  return stats;
}

std::string group_thousands(std::size_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  int count = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (count != 0 && count % 3 == 0) out.push_back(',');
    out.push_back(*it);
    ++count;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string format_stats(const CorpusStats& stats) {
  return group_thousands(stats.students) + " / " + group_thousands(stats.problems) + " / " +
         group_thousands(stats.submissions);
}

}  // namespace trajeval::corpus
