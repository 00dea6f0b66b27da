#include "trajeval/analysis/style.hpp"

#include <algorithm>
#include <regex>
#include <tuple>

#include "trajeval/python/lexer.hpp"
#include "trajeval/util/text.hpp"

namespace trajeval::analysis {

namespace {

using python::Token;
using python::TokenKind;

constexpr int kMaxLineLength = 79;
constexpr int kIndentSize = 4;
constexpr int kTopLevelBlankLines = 2;

struct Pos {
  int line = 0;
  int col = 0;  // byte offset
  bool operator==(const Pos&) const = default;
};

std::string_view strip_eol(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  return line;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view rstrip(std::string_view s) {
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view strip(std::string_view s) {
  s = rstrip(s);
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  return s;
}

// Tabs advance to the next multiple of eight.
int expand_indent(std::string_view line) {
  line = strip_eol(line);
  int result = 0;
  for (char c : line) {
    if (c == '\t') {
      result = result / 8 * 8 + 8;
    } else if (c == ' ') {
      ++result;
    } else {
      break;
    }
  }
  return result;
}

bool starts_with_ws_then(std::string_view s, std::string_view word) {
  if (s.substr(0, word.size()) != word || s.size() == word.size() || !is_space(s[word.size()]))
    return false;
  return true;
}

// `async def `, `def `, `class ` or a decorator.
bool starts_top_level(std::string_view s) {
  if (!s.empty() && s.front() == '@') return true;
  if (starts_with_ws_then(s, "def") || starts_with_ws_then(s, "class")) return true;
  if (starts_with_ws_then(s, "async")) {
    std::string_view rest = s.substr(5);
    while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
    return starts_with_ws_then(rest, "def");
  }
  return false;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> chunks;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) chunks.push_back(s.substr(start, i - start));
  }
  return chunks;
}

bool has_noqa(std::string_view line) {
  static const std::regex re("# no(?:qa|pep8)\\b", std::regex::icase);
  return std::regex_search(line.begin(), line.end(), re);
}

std::string mute_string(std::string_view text) {
  std::string out(text);
  char quote = text.back();
  std::size_t start = text.find(quote) + 1;
  std::size_t end = text.size() - 1;
  if (text.size() >= 6 && (text.substr(text.size() - 3) == "\"\"\"" || text.substr(text.size() - 3) == "'''")) {
    start += 2;
    end -= 2;
  }
  for (std::size_t i = start; i < end; ++i) out[i] = 'x';
  return out;
}

bool is_skip_token(TokenKind k) {
  return k == TokenKind::Newline || k == TokenKind::Nl || k == TokenKind::Indent || k == TokenKind::Dedent;
}

// Names after which `+`/`-` read as unary.
bool is_unary_context_keyword(std::string_view word) {
  if (word == "True" || word == "False" || word == "None") return false;
  return python::is_keyword(word) || word == "print" || word == "match" || word == "case" || word == "_";
}

class StyleChecker {
 public:
  explicit StyleChecker(std::string_view code)
      : src_(python::normalize_newlines(code)),
        lines_(util::split_lines_keep_ends(src_)),
        tokens_(python::tokenize(src_, /*lenient=*/true)) {}

  ViolationReport run() {
    check_physical_lines();
    check_logical_lines();
    std::sort(out_.begin(), out_.end(), [](const Violation& a, const Violation& b) {
      return std::tie(a.line, a.col, a.code) < std::tie(b.line, b.col, b.code);
    });
    return std::move(out_);
  }

 private:
  std::string_view line_text(int line) const {
    if (line < 1 || line > static_cast<int>(lines_.size())) return {};
    return lines_[line - 1];
  }

  // Converts a byte offset within `line` to a 1-based code-point column.
  int column(int line, int byte_col) const {
    std::string_view text = line_text(line);
    byte_col = std::min<int>(byte_col, static_cast<int>(text.size()));
    return static_cast<int>(util::utf8_length(text.substr(0, byte_col))) + 1;
  }

  void report(std::string code, Pos at, std::string message) {
    out_.push_back(Violation{std::move(code), at.line, column(at.line, at.col), std::move(message)});
  }

  void report_cp(std::string code, int line, int cp_col, std::string message) {
    out_.push_back(Violation{std::move(code), line, cp_col + 1, std::move(message)});
  }

  // ---- physical lines ----------------------------------------------------

  void check_physical_lines() {
    std::vector<bool> multiline(lines_.size() + 2, false);
    std::vector<bool> skipped(lines_.size() + 2, false);
    for (const Token& t : tokens_) {
      if ((t.kind == TokenKind::String || t.kind == TokenKind::Error) && t.end_line > t.line) {
        // A noqa marker anywhere on the string's lines silences the lines
        // inside the string.
        bool noqa = false;
        for (int l = t.line; l <= t.end_line; ++l) noqa = noqa || has_noqa(line_text(l));
        for (int l = t.line; l < t.end_line; ++l) {
          multiline[l] = true;
          skipped[l] = noqa;
        }
      }
    }
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      int line_no = static_cast<int>(i) + 1;
      if (!skipped[line_no]) check_physical(lines_[i], line_no, multiline[line_no]);
    }
  }

  void check_physical(std::string_view physical, int line_no, bool multiline) {
    std::size_t indent_end = physical.find_first_not_of(" \t");
    std::string_view indent = physical.substr(0, indent_end == std::string_view::npos ? physical.size() : indent_end);
    if (std::size_t tab = indent.find('\t'); tab != std::string_view::npos) {
      report_cp("W191", line_no, static_cast<int>(tab), "indentation contains tabs");
    }

    std::string_view body = physical;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r' || body.back() == '\f')) body.remove_suffix(1);
    std::string_view stripped = body;
    while (!stripped.empty() && (stripped.back() == ' ' || stripped.back() == '\t' || stripped.back() == '\v'))
      stripped.remove_suffix(1);
    if (stripped.size() != body.size()) {
      if (!stripped.empty()) {
        report_cp("W291", line_no, static_cast<int>(util::utf8_length(stripped)), "trailing whitespace");
      } else {
        report_cp("W293", line_no, 0, "blank line contains whitespace");
      }
    }

    std::string_view line = rstrip(physical);
    int length = static_cast<int>(util::utf8_length(line));
    if (length > kMaxLineLength && !has_noqa(physical)) {
      if (line_no == 1 && line.substr(0, 2) == "#!") return;
      auto chunks = split_whitespace(line);
      if (((chunks.size() == 1 && multiline) || (chunks.size() == 2 && chunks[0] == "#")) &&
          length - static_cast<int>(util::utf8_length(chunks.back())) < kMaxLineLength - 7) {
        return;
      }
      report_cp("E501", line_no, kMaxLineLength,
                "line too long (" + std::to_string(length) + " > " + std::to_string(kMaxLineLength) +
                    " characters)");
    }
  }

  // ---- logical lines -----------------------------------------------------

  void check_logical_lines() {
    int parens = 0;
    for (const Token& t : tokens_) {
      if (t.kind == TokenKind::EndMarker) break;
      current_.push_back(&t);
      if (t.kind == TokenKind::Op) {
        if (t.text == "(" || t.text == "[" || t.text == "{") {
          ++parens;
        } else if (t.text == ")" || t.text == "]" || t.text == "}") {
          --parens;
        }
      } else if (parens == 0) {
        if (t.kind == TokenKind::Newline) {
          check_logical();
          blank_before_ = 0;
        } else if (t.kind == TokenKind::Nl) {
          if (current_.size() == 1) {
            ++blank_lines_;
            current_.clear();
          } else {
            check_logical();
          }
        }
      }
    }
    if (!current_.empty()) check_logical();
  }

  // Rebuilds the logical line the way pycodestyle does: strings muted,
  // comments dropped, line breaks collapsed to single spaces.
  std::string build_logical(std::vector<const Token*>& code_tokens, Pos& start) const {
    std::string logical;
    const Token* prev = nullptr;
    bool have_start = false;
    for (const Token* t : current_) {
      if (is_skip_token(t->kind)) continue;
      if (!have_start) {
        start = {t->line, t->col};
        have_start = true;
      }
      if (t->kind == TokenKind::Comment) continue;
      std::string text = t->kind == TokenKind::String ? mute_string(t->text) : std::string(t->text);
      if (prev != nullptr) {
        if (prev->end_line != t->line) {
          std::string_view prev_line = line_text(prev->end_line);
          char prev_char = prev->end_col > 0 && prev->end_col - 1 < static_cast<int>(prev_line.size())
                               ? prev_line[prev->end_col - 1]
                               : '\0';
          bool closer = text == "}" || text == "]" || text == ")";
          bool opener = prev_char == '{' || prev_char == '[' || prev_char == '(';
          if (prev_char == ',' || (!opener && !closer)) text = " " + text;
        } else if (prev->end_col != t->col) {
          std::string_view line = line_text(t->line);
          text = std::string(line.substr(prev->end_col, t->col - prev->end_col)) + text;
        }
      }
      logical += text;
      code_tokens.push_back(t);
      prev = t;
    }
    if (!have_start) start = {-1, -1};
    return logical;
  }

  void check_logical() {
    std::vector<const Token*> code_tokens;
    Pos start;
    std::string logical = build_logical(code_tokens, start);
    if (start.line < 0) return;
    int line_number = current_.back()->line;

    int indent_level = expand_indent(line_text(start.line).substr(0, start.col));
    blank_before_ = std::max(blank_before_, blank_lines_);

    if (!logical.empty() && indent_level % kIndentSize != 0) {
      report("E111", start, "indentation is not a multiple of " + std::to_string(kIndentSize));
    }
    check_blank_lines(logical, indent_level, line_number, start);
    check_whitespace();
    check_semicolons(code_tokens);

    if (!logical.empty()) {
      previous_indent_level_ = indent_level;
      previous_logical_ = logical;
      if (indent_level == 0) previous_unindented_logical_ = logical;
    }
    blank_lines_ = 0;
    current_.clear();
  }

  bool is_one_liner(std::string_view logical, int indent_level, int line_number) const {
    if (!starts_top_level(logical)) return false;
    int idx = line_number - 1;
    int prev_indent = idx < 1 ? 0 : expand_indent(lines_[idx - 1]);
    if (prev_indent > indent_level) return false;
    int n = static_cast<int>(lines_.size());
    while (idx < n) {
      std::string_view l = strip(lines_[idx]);
      if (!(l.substr(0, 1) == "@") && starts_top_level(l)) break;
      ++idx;
    }
    if (idx >= n) return false;
    int next = idx + 1;
    while (next < n && strip(lines_[next]).empty()) ++next;
    if (next >= n) return true;
    return expand_indent(lines_[next]) <= indent_level;
  }

  void check_blank_lines(std::string_view logical, int indent_level, int line_number, Pos start) {
    if (previous_logical_.empty() && blank_before_ < kTopLevelBlankLines) return;
    if (!previous_logical_.empty() && previous_logical_.front() == '@') return;
    if (blank_lines_ > kTopLevelBlankLines || (indent_level != 0 && blank_lines_ == kTopLevelBlankLines)) {
      report("E303", start, "too many blank lines (" + std::to_string(blank_lines_) + ")");
    } else if (starts_top_level(logical)) {
      if (is_one_liner(logical, indent_level, line_number) && blank_before_ == 0) return;
      if (indent_level == 0 && blank_before_ != kTopLevelBlankLines) {
        report("E302", start,
               "expected 2 blank lines, found " + std::to_string(blank_before_));
      }
    } else if (!logical.empty() && indent_level == 0 && blank_before_ != kTopLevelBlankLines &&
               (previous_unindented_logical_.rfind("def ", 0) == 0 ||
                previous_unindented_logical_.rfind("class ", 0) == 0)) {
      report("E305", start,
             "expected 2 blank lines after class or function definition, found " +
                 std::to_string(blank_before_));
    }
  }

  // For every '[' token, whether a ':' appears directly at its nesting level.
  std::vector<bool> slice_brackets() const {
    std::vector<bool> is_slice(current_.size(), false);
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < current_.size(); ++i) {
      const Token* t = current_[i];
      if (t->kind != TokenKind::Op) continue;
      if (t->text == "(" || t->text == "[" || t->text == "{") {
        open.push_back(i);
      } else if (t->text == ")" || t->text == "]" || t->text == "}") {
        if (!open.empty()) open.pop_back();
      } else if (t->text == ":" && !open.empty() && current_[open.back()]->text == "[") {
        is_slice[open.back()] = true;
      }
    }
    return is_slice;
  }

  // E231 (commas) and E225/E226 for the operator subset, following the
  // token walk of pycodestyle's missing-whitespace check.
  void check_whitespace() {
    std::vector<bool> is_slice = slice_brackets();
    struct Brace {
      char kind;  // '(', '[', '{' or 'l' for lambda parameters
      bool slice;
    };
    std::vector<Brace> braces;
    enum class Need { No, Yes, Optional };
    Need need = Need::No;
    Pos optional_at;
    bool optional_space_before = false;
    const Token* prev = nullptr;

    for (std::size_t i = 0; i < current_.size(); ++i) {
      const Token* t = current_[i];
      bool op = t->kind == TokenKind::Op;
      if (op && (t->text == "(" || t->text == "[" || t->text == "{")) {
        braces.push_back({t->text[0], is_slice[i]});
      } else if (t->kind == TokenKind::Name && t->text == "lambda") {
        braces.push_back({'l', false});
      } else if (!braces.empty()) {
        if (op && (t->text == ")" || t->text == "]" || t->text == "}")) {
          braces.pop_back();
        } else if (braces.back().kind == 'l' && op && t->text == ":") {
          braces.pop_back();
        }
      }

      if (is_skip_token(t->kind) || t->kind == TokenKind::Comment || t->kind == TokenKind::Error) continue;

      if (op && t->text == ",") {
        std::string_view line = line_text(t->line);
        std::size_t next = static_cast<std::size_t>(t->end_col);
        std::string_view next_chars = next < line.size() ? line.substr(next) : std::string_view{};
        bool ok = next_chars.empty() || next_chars[0] == ' ' || next_chars[0] == '\t' ||
                  next_chars[0] == '\n' || next_chars[0] == '\r' || next_chars[0] == ')' ||
                  next_chars[0] == ']' || next_chars.substr(0, 2) == "\xc2\xa0";
        if (!ok) report("E231", {t->line, t->col}, "missing whitespace after ','");
      }

      Pos start{t->line, t->col};
      Pos prev_end = prev != nullptr ? Pos{prev->end_line, prev->end_col} : Pos{};
      if (need != Need::No) {
        if (!(start == prev_end)) {
          if (need == Need::Optional && !optional_space_before)
            report("E225", optional_at, "missing whitespace around operator");
          need = Need::No;
        } else {
          if (need == Need::Yes || optional_space_before) {
            report("E225", prev_end, "missing whitespace around operator");
          } else {
            report("E226", optional_at, "missing whitespace around arithmetic operator");
          }
          need = Need::No;
        }
      } else if ((op || t->kind == TokenKind::Name) && prev != nullptr) {
        bool optional = false;
        if (op && t->text == "=" && !braces.empty() &&
            (braces.back().kind == 'l' || braces.back().kind == '(')) {
          // keyword argument, parameter default or lambda default
        } else if (op && (t->text == "=" || t->text == "==" || t->text == "<" || t->text == ">")) {
          need = Need::Yes;
        } else if (op && (t->text == "+" || t->text == "-")) {
          bool in_slice = !braces.empty() && braces.back().kind == '[' && braces.back().slice;
          bool prev_op = prev->kind == TokenKind::Op;
          bool binary = prev_op ? (prev->text == ")" || prev->text == "]" || prev->text == "}")
                                : !(prev->kind == TokenKind::Name && is_unary_context_keyword(prev->text));
          if (binary && !in_slice) optional = true;
        }
        if (optional) {
          need = Need::Optional;
          optional_at = prev_end;
          optional_space_before = !(start == prev_end);
        } else if (need == Need::Yes && start == prev_end) {
          report("E225", prev_end, "missing whitespace around operator");
          need = Need::No;
        }
      }
      prev = t;
    }
  }

  void check_semicolons(const std::vector<const Token*>& code_tokens) {
    for (std::size_t i = 0; i < code_tokens.size(); ++i) {
      const Token* t = code_tokens[i];
      if (t->kind != TokenKind::Op || t->text != ";") continue;
      if (i + 1 < code_tokens.size()) {
        report("E702", {t->line, t->col}, "multiple statements on one line (semicolon)");
      } else {
        report("E703", {t->line, t->col}, "statement ends with a semicolon");
      }
    }
  }

  std::string src_;
  std::vector<std::string_view> lines_;
  std::vector<Token> tokens_;
  ViolationReport out_;

  std::vector<const Token*> current_;
  int blank_lines_ = 0;
  int blank_before_ = 0;
  int previous_indent_level_ = 0;
  std::string previous_logical_;
  std::string previous_unindented_logical_;
};

}  // namespace

ViolationReport style_check(std::string_view code) { return StyleChecker(code).run(); }

}  // namespace trajeval::analysis
