#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include "trajeval/error.hpp"

namespace trajeval::util {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Connection-level failure (refused, reset, timed out).
class TransportError : public Error {
 public:
  using Error::Error;
};

/// POSTs a JSON body to an http:// or https:// URL.
HttpResponse post_json(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       std::chrono::milliseconds timeout);

/// 429 and 5xx are worth retrying; other errors are not.
bool retryable_status(int status);

}  // namespace trajeval::util
