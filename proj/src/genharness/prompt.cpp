#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "trajeval/genharness/genharness.hpp"
#include "trajeval/util/text.hpp"

namespace trajeval::genharness {

namespace {

const std::set<std::string, std::less<>> kNames = {"problem_statement", "skeleton", "stage", "history", "context"};

struct Tag {
  std::size_t begin = 0;  // offset of "{{"
  std::size_t end = 0;    // offset past "}}"
  char kind = 0;          // 0 for a value, '#', '^' or '/'
  std::string name;
};

std::vector<Tag> scan(std::string_view body, const std::string& template_id) {
  std::vector<Tag> tags;
  std::size_t pos = 0;
  while ((pos = body.find("{{", pos)) != std::string_view::npos) {
    std::size_t close = body.find("}}", pos + 2);
    if (close == std::string_view::npos) throw Error("template " + template_id + ": unterminated '{{'");
    Tag t;
    t.begin = pos;
    t.end = close + 2;
    std::string_view inner = body.substr(pos + 2, close - pos - 2);
    while (!inner.empty() && inner.front() == ' ') inner.remove_prefix(1);
    while (!inner.empty() && inner.back() == ' ') inner.remove_suffix(1);
    if (!inner.empty() && (inner.front() == '#' || inner.front() == '^' || inner.front() == '/')) {
      t.kind = inner.front();
      inner.remove_prefix(1);
    }
    t.name = std::string(inner);
    if (kNames.find(t.name) == kNames.end())
      throw Error("template " + template_id + ": unknown placeholder '" + t.name + "'");
    tags.push_back(std::move(t));
    pos = close + 2;
  }
  std::vector<std::string> open;
  for (const auto& t : tags) {
    if (t.kind == '#' || t.kind == '^') open.push_back(t.name);
    if (t.kind == '/') {
      if (open.empty() || open.back() != t.name)
        throw Error("template " + template_id + ": unbalanced section '" + t.name + "'");
      open.pop_back();
    }
  }
  if (!open.empty()) throw Error("template " + template_id + ": section '" + open.back() + "' is never closed");
  return tags;
}

// A section tag alone on its line takes the line with it, so sections do not
// leave blank lines behind.
std::pair<std::size_t, std::size_t> tag_span(std::string_view body, const Tag& t) {
  if (t.kind == 0) return {t.begin, t.end};
  std::size_t line_start = body.rfind('\n', t.begin == 0 ? 0 : t.begin - 1);
  line_start = (t.begin == 0 || line_start == std::string_view::npos) ? 0 : line_start + 1;
  if (t.begin > 0 && body[t.begin - 1] != '\n' && line_start != t.begin) {
    std::string_view before = body.substr(line_start, t.begin - line_start);
    if (before.find_first_not_of(" \t") != std::string_view::npos) return {t.begin, t.end};
  }
  std::size_t after = t.end;
  while (after < body.size() && (body[after] == ' ' || body[after] == '\t')) ++after;
  if (after == body.size()) return {line_start, after};
  if (body[after] == '\n') return {line_start, after + 1};
  return {t.begin, t.end};
}

std::string render(std::string_view body, const std::vector<Tag>& tags, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t cursor = 0;
  int skipping = 0;  // depth of sections being suppressed
  for (const auto& t : tags) {
    auto [b, e] = tag_span(body, t);
    if (skipping == 0) out.append(body.substr(cursor, b - cursor));
    cursor = e;
    auto it = values.find(t.name);
    bool present = it != values.end() && !it->second.empty();
    if (t.kind == '#' || t.kind == '^') {
      bool show = t.kind == '#' ? present : !present;
      if (skipping > 0 || !show) ++skipping;
    } else if (t.kind == '/') {
      if (skipping > 0) --skipping;
    } else if (skipping == 0 && present) {
      out.append(it->second);
    }
  }
  out.append(body.substr(cursor));
  return out;
}

std::string wrap(const PromptTemplate& tmpl, const std::string& code) {
  std::string s = tmpl.code_open + "\n" + code;
  if (s.back() != '\n') s += '\n';
  return s + tmpl.code_close;
}

std::string wrap_all(const PromptTemplate& tmpl, const std::vector<const corpus::Submission*>& subs) {
  std::string s;
  for (const auto* sub : subs) {
    if (!s.empty()) s += '\n';
    s += wrap(tmpl, sub->code);
  }
  return s;
}

void require(const PromptTemplate& tmpl, const std::vector<std::string>& names) {
  auto have = tmpl.placeholders();
  for (const auto& n : names)
    if (std::find(have.begin(), have.end(), n) == have.end())
      throw Error("template " + tmpl.template_id + " has no '{{" + n + "}}' placeholder");
}

Prompt finish(const PromptTemplate& tmpl, ExampleRef ref, const std::map<std::string, std::string>& values) {
  Prompt p;
  p.example = std::move(ref);
  p.template_id = tmpl.template_id;
  p.system = tmpl.system;
  p.user = render(tmpl.body, scan(tmpl.body, tmpl.template_id), values);
  return p;
}

ExampleRef ref_for(const corpus::Submission& target) {
  ExampleRef r;
  r.student_id = target.student_id;
  r.problem_id = target.problem_id;
  r.semester = target.semester;
  r.attempt_index = target.attempt_index;
  r.timestamp_ms = target.timestamp_ms;
  return r;
}

std::map<std::string, std::string> problem_values(const PromptTemplate& tmpl, const corpus::ProblemSpec* problem,
                                                  const corpus::Submission& target) {
  if (problem == nullptr) throw Error("example for " + target.problem_id + " has no problem statement attached");
  std::map<std::string, std::string> v;
  v["problem_statement"] = problem->statement;
  if (!problem->skeleton_code.empty()) v["skeleton"] = wrap(tmpl, problem->skeleton_code);
  return v;
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string_view text, std::string template_id) {
  PromptTemplate t;
  t.template_id = std::move(template_id);
  std::string s(text);
  s.erase(std::remove(s.begin(), s.end(), '\r'), s.end());
  std::size_t sep = std::string::npos;
  if (s.rfind("---\n", 0) == 0) {
    sep = 0;
  } else if (std::size_t p = s.find("\n---\n"); p != std::string::npos) {
    sep = p + 1;
  }
  if (sep != std::string::npos) {
    t.system = s.substr(0, sep);
    while (!t.system.empty() && t.system.back() == '\n') t.system.pop_back();
    t.body = s.substr(sep + 4);
  } else {
    t.body = s;
  }
  scan(t.body, t.template_id);
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read template " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  return parse(text, path.stem().string() + "@" + util::sha256_hex(text).substr(0, 12));
}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> names;
  for (const auto& t : scan(body, template_id))
    if (std::find(names.begin(), names.end(), t.name) == names.end()) names.push_back(t.name);
  return names;
}

PromptTemplate default_template() {
  static const char* kText =
      "You are a student in an introductory Python programming course, working on a homework problem. "
      "Write code the way such a student would at this point in their work, mistakes included.\n"
      "---\n"
      "Problem:\n"
      "{{problem_statement}}\n"
      "{{#skeleton}}\n"
      "\n"
      "Starter code:\n"
      "{{skeleton}}\n"
      "{{/skeleton}}\n"
      "{{#context}}\n"
      "\n"
      "Your code from an earlier problem, at the same point in your work:\n"
      "{{context}}\n"
      "{{/context}}\n"
      "{{#history}}\n"
      "\n"
      "Your previous submissions for this problem, oldest first:\n"
      "{{history}}\n"
      "{{/history}}\n"
      "\n"
      "{{#stage}}\n"
      "Write your {{stage}} submission for this problem.\n"
      "{{/stage}}\n"
      "{{^stage}}\n"
      "Write your next submission for this problem.\n"
      "{{/stage}}\n"
      "Reply with the code only, wrapped in <code> and </code>.\n";
  PromptTemplate t = PromptTemplate::parse(kText, "default");
  t.template_id = "default@" + util::sha256_hex(kText).substr(0, 12);
  return t;
}

Prompt build_prompt(const streams::LowResExample& example, const PromptTemplate& tmpl) {
  if (example.target == nullptr) throw Error("example has no target");
  std::vector<std::string> needed = {"problem_statement", "stage"};
  if (example.context != nullptr) needed.push_back("context");
  require(tmpl, needed);
  auto values = problem_values(tmpl, example.problem, *example.target);
  values["stage"] = std::string(streams::to_string(example.stage));
  if (example.context != nullptr) values["context"] = wrap(tmpl, example.context->code);
  ExampleRef ref = ref_for(*example.target);
  ref.stage = values["stage"];
  ref.with_context = example.context != nullptr;
  return finish(tmpl, std::move(ref), values);
}

Prompt build_prompt(const streams::HighResExample& example, const PromptTemplate& tmpl) {
  if (example.target == nullptr) throw Error("example has no target");
  std::vector<std::string> needed = {"problem_statement", "history"};
  if (example.context_segment) needed.push_back("context");
  require(tmpl, needed);
  auto values = problem_values(tmpl, example.problem, *example.target);
  values["history"] = wrap_all(tmpl, example.history);
  if (example.context_segment) values["context"] = wrap_all(tmpl, *example.context_segment);
  ExampleRef ref = ref_for(*example.target);
  ref.with_context = example.context_segment.has_value();
  return finish(tmpl, std::move(ref), values);
}

}  // namespace trajeval::genharness
