#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace trajeval::util {

/// Number of code points in a UTF-8 string (bytes that are not continuation
/// bytes).
std::size_t utf8_length(std::string_view s);

/// Splits on '\n', keeping the terminator on every line that has one.
std::vector<std::string_view> split_lines_keep_ends(std::string_view s);

/// Lowercase hex SHA-256 of the bytes of `s`.
std::string sha256_hex(std::string_view s);

/// Writes `s` as one CSV field, quoting only when needed.
void write_csv_field(std::ostream& out, std::string_view s);

}  // namespace trajeval::util
