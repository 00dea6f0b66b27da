#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajeval/corpus/corpus.hpp"

namespace trajeval::streams {

using corpus::ProblemSpec;
using corpus::Stream;
using corpus::Submission;

enum class Stage { First, Middle, Last };

inline constexpr Stage kStages[] = {Stage::First, Stage::Middle, Stage::Last};

std::string_view to_string(Stage stage);
/// Accepts "first" (or its synonym "start"), "middle" and "last".
Stage parse_stage(std::string_view text);

struct StageIndices {
  int first = 0;
  int middle = 0;
  int last = 0;

  int at(Stage stage) const;
  bool operator==(const StageIndices&) const = default;
};

/// (0, floor((n-1)/2), n-1). Throws for n < 1.
StageIndices stage_indices(int n);

/// Attempt index in a stream of length m at the same relative position as
/// attempt t in a stream of length n; rounds half up.
int align_relative(int t, int n, int m);

// Examples point into the corpus they were extracted from, which must outlive
// them.
struct LowResExample {
  Stage stage = Stage::First;
  const Submission* target = nullptr;
  const ProblemSpec* problem = nullptr;
  const Submission* context = nullptr;  // same stage of a prior problem
};

struct HighResExample {
  const Submission* target = nullptr;
  std::vector<const Submission*> history;  // oldest first
  const ProblemSpec* problem = nullptr;
  std::optional<std::vector<const Submission*>> context_segment;  // oldest first
};

std::vector<LowResExample> extract_low_res(const Stream& stream, const Stream* prior = nullptr,
                                           const ProblemSpec* problem = nullptr);

/// One example per target attempt 1..n-1; empty for single-attempt streams.
std::vector<HighResExample> extract_high_res(const Stream& stream, int k, const Stream* prior = nullptr,
                                             const ProblemSpec* problem = nullptr);

/// The same student's stream on the problem worked on most recently before
/// this one (by first-attempt timestamp), or nullptr when there is none.
const Stream* select_prior_stream(const corpus::Corpus& corpus, const Stream& stream);

// ---- serialization -----------------------------------------------------------

struct SubmissionRef {
  std::string student_id;
  std::string problem_id;
  int attempt_index = 0;

  auto operator<=>(const SubmissionRef&) const = default;
  bool operator==(const SubmissionRef&) const = default;
};

SubmissionRef ref_of(const Submission& s);

/// One JSON object per line with fields stage, target_ref, history_refs and
/// context_refs.
std::string to_jsonl(const std::vector<LowResExample>& examples);
std::string to_jsonl(const std::vector<HighResExample>& examples);

}  // namespace trajeval::streams
