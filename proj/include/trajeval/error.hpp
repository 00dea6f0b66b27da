#pragma once

#include <stdexcept>
#include <string>

namespace trajeval {

/// Base for errors raised by the toolkit on bad input or configuration.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trajeval
