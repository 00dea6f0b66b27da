#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testing_paths {

inline std::filesystem::path data(const std::string& rel) { return std::filesystem::path(TRAJEVAL_TEST_DATA) / rel; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testing_paths
