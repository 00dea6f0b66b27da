#include "trajeval/streams/streams.hpp"

#include <algorithm>
#include <tuple>

#include <json.hpp>

namespace trajeval::streams {

using nlohmann::ordered_json;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::First:
      return "first";
    case Stage::Middle:
      return "middle";
    case Stage::Last:
      return "last";
  }
  return "first";
}

Stage parse_stage(std::string_view text) {
  if (text == "first" || text == "start") return Stage::First;
  if (text == "middle") return Stage::Middle;
  if (text == "last") return Stage::Last;
  throw Error("unknown stage '" + std::string(text) + "'");
}

int StageIndices::at(Stage stage) const {
  switch (stage) {
    case Stage::First:
      return first;
    case Stage::Middle:
      return middle;
    case Stage::Last:
      return last;
  }
  return first;
}

StageIndices stage_indices(int n) {
  if (n < 1) throw Error("stage_indices: stream length must be at least 1");
  return {0, (n - 1) / 2, n - 1};
}

int align_relative(int t, int n, int m) {
  if (n < 1 || m < 1 || t < 0 || t >= n) throw Error("align_relative: index out of range");
  if (n == 1) return 0;
  // round(t * (m-1) / (n-1)) with halves rounded up, in integers.
  long long num = 2LL * t * (m - 1) + (n - 1);
  return static_cast<int>(num / (2LL * (n - 1)));
}

namespace {

void check_prior(const Stream& stream, const Stream* prior) {
  if (prior == nullptr) return;
  if (prior->student_id != stream.student_id)
    throw Error("context stream belongs to a different student (" + prior->student_id + " vs " +
                stream.student_id + ")");
  if (prior->problem_id == stream.problem_id)
    throw Error("context stream must come from a different problem than " + stream.problem_id);
  if (prior->submissions.empty()) throw Error("context stream is empty");
}

}  // namespace

std::vector<LowResExample> extract_low_res(const Stream& stream, const Stream* prior, const ProblemSpec* problem) {
  if (stream.submissions.empty()) throw Error("extract_low_res: empty stream");
  check_prior(stream, prior);
  StageIndices idx = stage_indices(static_cast<int>(stream.size()));
  std::vector<LowResExample> out;
  for (Stage stage : kStages) {
    LowResExample ex;
    ex.stage = stage;
    ex.target = &stream.submissions[idx.at(stage)];
    ex.problem = problem;
    if (prior != nullptr) {
      StageIndices pidx = stage_indices(static_cast<int>(prior->size()));
      ex.context = &prior->submissions[pidx.at(stage)];
    }
    out.push_back(ex);
  }
  return out;
}

std::vector<HighResExample> extract_high_res(const Stream& stream, int k, const Stream* prior,
                                             const ProblemSpec* problem) {
  if (k < 1) throw Error("extract_high_res: k must be at least 1");
  check_prior(stream, prior);
  int n = static_cast<int>(stream.size());
  std::vector<HighResExample> out;
  for (int t = 1; t < n; ++t) {
    HighResExample ex;
    ex.target = &stream.submissions[t];
    ex.problem = problem;
    for (int j = std::max(0, t - k); j < t; ++j) ex.history.push_back(&stream.submissions[j]);
    if (prior != nullptr) {
      int m = static_cast<int>(prior->size());
      int end = align_relative(t, n, m);
      std::vector<const Submission*> segment;
      for (int j = std::max(0, end - k); j <= end; ++j) segment.push_back(&prior->submissions[j]);
      ex.context_segment = std::move(segment);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

const Stream* select_prior_stream(const corpus::Corpus& corpus, const Stream& stream) {
  if (stream.submissions.empty()) return nullptr;
  auto start = stream.submissions.front().timestamp_ms;
  const Stream* best = nullptr;
  for (const auto& s : corpus.streams) {
    if (s.student_id != stream.student_id || s.problem_id == stream.problem_id || s.submissions.empty())
      continue;
    auto ts = s.submissions.front().timestamp_ms;
    if (ts >= start) continue;
    // Latest start wins; streams are visited in key order so ties keep the
    // smallest key.
    if (best == nullptr || ts > best->submissions.front().timestamp_ms) best = &s;
  }
  return best;
}

SubmissionRef ref_of(const Submission& s) { return {s.student_id, s.problem_id, s.attempt_index}; }

namespace {

ordered_json ref_json(const Submission* s) {
  ordered_json j;
  j["student_id"] = s->student_id;
  j["problem_id"] = s->problem_id;
  j["attempt_index"] = s->attempt_index;
  return j;
}

ordered_json refs_json(const std::vector<const Submission*>& subs) {
  ordered_json arr = ordered_json::array();
  for (const auto* s : subs) arr.push_back(ref_json(s));
  return arr;
}

}  // namespace

std::string to_jsonl(const std::vector<LowResExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    ordered_json j;
    j["stage"] = std::string(to_string(ex.stage));
    j["target_ref"] = ref_json(ex.target);
    j["history_refs"] = ordered_json::array();
    j["context_refs"] = ex.context != nullptr ? refs_json({ex.context}) : ordered_json::array();
    out += j.dump() + "\n";
  }
  return out;
}

std::string to_jsonl(const std::vector<HighResExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    ordered_json j;
    j["stage"] = nullptr;
    j["target_ref"] = ref_json(ex.target);
    j["history_refs"] = refs_json(ex.history);
    j["context_refs"] = ex.context_segment ? refs_json(*ex.context_segment) : ordered_json::array();
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace trajeval::streams
