#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace trajeval::analysis {

struct Violation {
  std::string code;  // e.g. "E501"
  int line = 0;      // 1-based
  int col = 0;       // 1-based, in code points
  std::string message;

  bool operator==(const Violation&) const = default;
};

using ViolationReport = std::vector<Violation>;

/// Lexical style checks over a fixed rule subset:
///
///   E501 line longer than 79 characters
///   W291 trailing whitespace, W293 whitespace on a blank line
///   W191 tab in indentation
///   E111 indentation not a multiple of four
///   E302/E303/E305 blank lines around top-level definitions
///   E231 missing whitespace after ','
///   E225/E226 missing whitespace around = == < > + - (slices exempt for + -)
///   E702/E703 statements separated or terminated by ';'
///
/// Positions and rule semantics follow pycodestyle so counts are comparable.
/// Works on code that does not tokenize cleanly; ordering is by
/// (line, col, code).
ViolationReport style_check(std::string_view code);

}  // namespace trajeval::analysis
