#pragma once

#include <string_view>

#include "trajeval/python/ast.hpp"
#include "trajeval/python/lexer.hpp"

namespace trajeval::python {

/// Parses a module with the Python 3.10 grammar.
///
/// The tree mirrors what the reference `ast` module produces, minus
/// expression contexts, so node counts and shapes are comparable with
/// `ast.walk`. Throws SyntaxError on anything `ast.parse` would reject at
/// parse time (compile-time checks such as `return` outside a function are
/// not performed).
Tree parse_module(std::string_view source);

}  // namespace trajeval::python
