#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trajeval::python {

enum class TokenKind : std::uint8_t {
  Name,
  Number,
  String,
  Op,
  Newline,   // end of a logical line
  Nl,        // non-logical line break (blank line, comment line, inside brackets)
  Comment,
  Indent,
  Dedent,
  EndMarker,
  Error,     // only produced in lenient mode
};

struct Token {
  TokenKind kind;
  std::string_view text;
  int line = 0;  // 1-based
  int col = 0;   // 0-based byte offset
  int end_line = 0;
  int end_col = 0;
};

/// Raised by the strict tokenizer and by the parser.
class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& msg, int line, int col)
      : std::runtime_error(msg), line_(line), col_(col) {}
  int line() const noexcept { return line_; }
  int col() const noexcept { return col_; }

 private:
  int line_;
  int col_;
};

/// Converts CRLF and lone CR line endings to LF.
std::string normalize_newlines(std::string_view src);

/// Tokenizes Python 3 source following the reference tokenizer's rules for
/// indentation, implicit/explicit line joining and string prefixes.
///
/// Token texts are views into `src`, which must outlive the result. In
/// lenient mode lexical errors become `TokenKind::Error` tokens instead of
/// exceptions, so style checks can run over code that does not compile.
std::vector<Token> tokenize(std::string_view src, bool lenient = false);

bool is_keyword(std::string_view word);

}  // namespace trajeval::python
