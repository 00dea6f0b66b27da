#include "trajeval/python/lexer.hpp"

#include <algorithm>
#include <array>

namespace trajeval::python {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",     "True",    "and",    "as",     "assert", "async",
    "await", "break",    "class",   "continue", "def",  "del",    "elif",
    "else",  "except",   "finally", "for",    "from",   "global", "if",
    "import", "in",      "is",      "lambda", "nonlocal", "not",  "or",
    "pass",  "raise",    "return",  "try",    "while",  "with",   "yield"};

constexpr std::array<std::string_view, 4> kThreeCharOps = {"**=", "//=", ">>=", "<<="};
constexpr std::array<std::string_view, 19> kTwoCharOps = {
    "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", ":="};
constexpr std::string_view kOneCharOps = "+-*/%@&|^~<>()[]{},:.;=";

bool is_ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

bool is_ident_char(unsigned char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_hex_digit(char c) { return is_digit(c) || ((c | 0x20) >= 'a' && (c | 0x20) <= 'f'); }
bool is_oct_digit(char c) { return c >= '0' && c <= '7'; }
bool is_bin_digit(char c) { return c == '0' || c == '1'; }

bool is_string_prefix(std::string_view word) {
  if (word.size() > 2) return false;
  std::string lower;
  for (char c : word) lower.push_back(static_cast<char>(c | 0x20));
  return lower == "r" || lower == "u" || lower == "f" || lower == "b" || lower == "br" ||
         lower == "rb" || lower == "fr" || lower == "rf";
}

class Lexer {
 public:
  Lexer(std::string_view src, bool lenient) : src_(src), lenient_(lenient) {}

  std::vector<Token> run() {
    indents_.push_back({0, 0});
    while (true) {
      if (at_line_start_) {
        if (!handle_line_start()) break;
      }
      if (pos_ >= src_.size()) break;
      scan_token();
    }
    finish();
    return std::move(tokens_);
  }

 private:
  struct IndentLevel {
    int col;
    int alt_col;
  };

  int col() const { return static_cast<int>(pos_ - line_start_); }

  void emit(TokenKind kind, std::size_t begin, std::size_t end, int line, int col,
            int end_line, int end_col) {
    tokens_.push_back(Token{kind, src_.substr(begin, end - begin), line, col, end_line, end_col});
  }

  void emit_here(TokenKind kind, std::size_t begin, std::size_t end) {
    int c = static_cast<int>(begin - line_start_);
    emit(kind, begin, end, line_, c, line_, c + static_cast<int>(end - begin));
  }

  void fail(const std::string& msg, int line, int c) {
    if (!lenient_) throw SyntaxError(msg, line, c);
  }

  // Returns false at end of input.
  bool handle_line_start() {
    at_line_start_ = false;
    if (!brackets_.empty() || continuation_) {
      continuation_ = false;
      return pos_ < src_.size();
    }
    int c = 0;
    int alt = 0;
    std::size_t p = pos_;
    while (p < src_.size()) {
      char ch = src_[p];
      if (ch == ' ') {
        ++c;
        ++alt;
      } else if (ch == '\t') {
        c = (c / 8 + 1) * 8;
        ++alt;
      } else if (ch == '\f') {
        c = alt = 0;
      } else {
        break;
      }
      ++p;
    }
    if (p >= src_.size()) {
      pos_ = p;
      return false;
    }
    if (src_[p] == '#' || src_[p] == '\n' || src_[p] == '\\') {
      // Blank and comment-only lines do not affect indentation. A lone
      // backslash line is treated the same way and joined below.
      if (src_[p] == '\\') return true;
      pos_ = p;
      blank_line_ = true;
      return true;
    }
    blank_line_ = false;
    int token_col = static_cast<int>(p - line_start_);
    IndentLevel top = indents_.back();
    if (c == top.col) {
      if (alt != top.alt_col) fail("inconsistent use of tabs and spaces in indentation", line_, token_col);
    } else if (c > top.col) {
      if (alt <= top.alt_col) fail("inconsistent use of tabs and spaces in indentation", line_, token_col);
      indents_.push_back({c, alt});
      emit(TokenKind::Indent, pos_, p, line_, 0, line_, token_col);
    } else {
      while (indents_.size() > 1 && c < indents_.back().col) {
        indents_.pop_back();
        emit(TokenKind::Dedent, p, p, line_, token_col, line_, token_col);
      }
      if (c != indents_.back().col) {
        fail("unindent does not match any outer indentation level", line_, token_col);
        indents_.push_back({c, alt});
      } else if (alt != indents_.back().alt_col) {
        fail("inconsistent use of tabs and spaces in indentation", line_, token_col);
      }
    }
    pos_ = p;
    return true;
  }

  void newline_token() {
    std::size_t begin = pos_;
    ++pos_;
    bool logical = brackets_.empty() && logical_has_tokens_ && !blank_line_;
    emit_here(logical ? TokenKind::Newline : TokenKind::Nl, begin, pos_);
    if (logical) logical_has_tokens_ = false;
    ++line_;
    line_start_ = pos_;
    at_line_start_ = true;
    blank_line_ = false;
  }

  void scan_token() {
    char ch = src_[pos_];
    if (ch == ' ' || ch == '\t' || ch == '\f') {
      ++pos_;
      return;
    }
    if (ch == '\n') {
      newline_token();
      return;
    }
    if (ch == '#') {
      std::size_t begin = pos_;
      while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      emit_here(TokenKind::Comment, begin, pos_);
      return;
    }
    if (ch == '\\') {
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
        pos_ += 2;
        ++line_;
        line_start_ = pos_;
        at_line_start_ = true;
        continuation_ = true;
        if (pos_ >= src_.size()) fail("unexpected EOF while parsing", line_, 0);
        return;
      }
      fail("unexpected character after line continuation character", line_, col());
      emit_here(TokenKind::Error, pos_, pos_ + 1);
      ++pos_;
      return;
    }
    blank_line_ = false;
    logical_has_tokens_ = true;
    auto uc = static_cast<unsigned char>(ch);
    if (is_ident_start(uc)) {
      std::size_t begin = pos_;
      while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') &&
          is_string_prefix(src_.substr(begin, pos_ - begin))) {
        scan_string(begin);
        return;
      }
      emit_here(TokenKind::Name, begin, pos_);
      return;
    }
    if (is_digit(ch) || (ch == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
      scan_number();
      return;
    }
    if (ch == '\'' || ch == '"') {
      scan_string(pos_);
      return;
    }
    scan_operator();
  }

  void scan_string(std::size_t begin) {
    int start_line = line_;
    int start_col = static_cast<int>(begin - line_start_);
    char quote = src_[pos_];
    bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
    pos_ += triple ? 3 : 1;
    while (true) {
      if (pos_ >= src_.size()) {
        fail(triple ? "unterminated triple-quoted string literal" : "unterminated string literal",
             start_line, start_col);
        emit(TokenKind::Error, begin, pos_, start_line, start_col, line_, col());
        return;
      }
      char c = src_[pos_];
      if (c == '\\') {
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
          pos_ += 2;
          ++line_;
          line_start_ = pos_;
        } else {
          pos_ += std::min<std::size_t>(2, src_.size() - pos_);
        }
        continue;
      }
      if (c == '\n') {
        if (!triple) {
          fail("unterminated string literal", start_line, start_col);
          emit(TokenKind::Error, begin, pos_, start_line, start_col, line_, col());
          return;
        }
        ++pos_;
        ++line_;
        line_start_ = pos_;
        continue;
      }
      if (c == quote) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    emit(TokenKind::String, begin, pos_, start_line, start_col, line_, col());
  }

  void scan_digits(bool (*ok)(char)) {
    while (pos_ < src_.size() && (ok(src_[pos_]) || src_[pos_] == '_')) {
      if (src_[pos_] == '_' && (pos_ + 1 >= src_.size() || !ok(src_[pos_ + 1]))) {
        fail("invalid decimal literal", line_, col());
        break;
      }
      ++pos_;
    }
  }

  void scan_number() {
    std::size_t begin = pos_;
    auto* dec = &is_digit;
    if (src_[pos_] == '0' && pos_ + 1 < src_.size()) {
      char p = static_cast<char>(src_[pos_ + 1] | 0x20);
      bool (*ok)(char) = nullptr;
      if (p == 'x') ok = &is_hex_digit;
      if (p == 'o') ok = &is_oct_digit;
      if (p == 'b') ok = &is_bin_digit;
      if (ok != nullptr) {
        pos_ += 2;
        if (pos_ < src_.size() && src_[pos_] == '_') ++pos_;
        std::size_t digits_begin = pos_;
        scan_digits(ok);
        if (pos_ == digits_begin) fail("invalid number literal", line_, col());
        emit_here(TokenKind::Number, begin, pos_);
        return;
      }
    }
    bool is_float = false;
    if (src_[pos_] != '.') scan_digits(dec);
    std::string_view int_part = src_.substr(begin, pos_ - begin);
    if (pos_ < src_.size() && src_[pos_] == '.') {
      is_float = true;
      ++pos_;
      if (pos_ < src_.size() && dec(src_[pos_])) scan_digits(dec);
    }
    if (pos_ < src_.size() && (src_[pos_] | 0x20) == 'e') {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && dec(src_[pos_])) {
        scan_digits(dec);
        is_float = true;
      } else {
        pos_ = save;
      }
    }
    bool imaginary = false;
    if (pos_ < src_.size() && (src_[pos_] | 0x20) == 'j') {
      ++pos_;
      imaginary = true;
    }
    if (!is_float && !imaginary && int_part.size() > 1 && int_part[0] == '0' &&
        int_part.find_first_not_of("0_") != std::string_view::npos) {
      fail("leading zeros in decimal integer literals are not permitted", line_,
           static_cast<int>(begin - line_start_));
    }
    emit_here(TokenKind::Number, begin, pos_);
  }

  void scan_operator() {
    std::string_view rest = src_.substr(pos_);
    std::size_t len = 0;
    if (rest.substr(0, 3) == "...") {
      len = 3;
    } else {
      for (auto op : kThreeCharOps)
        if (rest.substr(0, 3) == op) len = 3;
      if (len == 0)
        for (auto op : kTwoCharOps)
          if (rest.substr(0, 2) == op) len = 2;
      if (len == 0 && kOneCharOps.find(rest[0]) != std::string_view::npos) len = 1;
    }
    if (len == 0) {
      fail(std::string("invalid character '") + rest[0] + "'", line_, col());
      emit_here(TokenKind::Error, pos_, pos_ + 1);
      ++pos_;
      return;
    }
    char c = rest[0];
    if (len == 1 && (c == '(' || c == '[' || c == '{')) {
      brackets_.push_back(c);
    } else if (len == 1 && (c == ')' || c == ']' || c == '}')) {
      if (brackets_.empty()) {
        fail(std::string("unmatched '") + c + "'", line_, col());
      } else {
        char open = brackets_.back();
        bool match = (open == '(' && c == ')') || (open == '[' && c == ']') || (open == '{' && c == '}');
        if (!match) {
          fail(std::string("closing parenthesis '") + c + "' does not match opening parenthesis '" +
                   open + "'",
               line_, col());
        }
        brackets_.pop_back();
      }
    }
    emit_here(TokenKind::Op, pos_, pos_ + len);
    pos_ += len;
  }

  void finish() {
    if (!brackets_.empty()) fail("unexpected EOF while parsing", line_, col());
    if (logical_has_tokens_) emit_here(TokenKind::Newline, pos_, pos_);
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit_here(TokenKind::Dedent, pos_, pos_);
    }
    emit_here(TokenKind::EndMarker, pos_, pos_);
  }

  std::string_view src_;
  bool lenient_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  int line_ = 1;
  bool at_line_start_ = true;
  bool continuation_ = false;
  bool blank_line_ = false;
  bool logical_has_tokens_ = false;
  std::vector<char> brackets_;
  std::vector<IndentLevel> indents_;
  std::vector<Token> tokens_;
};

}  // namespace

std::string normalize_newlines(std::string_view src) {
  std::string out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < src.size() && src[i + 1] == '\n') ++i;
    } else {
      out.push_back(src[i]);
    }
  }
  return out;
}

std::vector<Token> tokenize(std::string_view src, bool lenient) {
  return Lexer(src, lenient).run();
}

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

}  // namespace trajeval::python
