#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace trajeval::util {

struct ProcessResult {
  int exit_code = -1;    // valid when !signaled
  bool signaled = false;
  int signal = 0;
  bool timed_out = false;  // killed by the watchdog
  std::string out;
  std::string err;
};

/// Runs argv[0] (searched on PATH) in its own process group with `input` on
/// stdin. The whole group is killed once `timeout` elapses. Throws
/// trajeval::Error when the program cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout, const std::filesystem::path& cwd = {});

/// Splits a command line on whitespace, honoring single and double quotes.
std::vector<std::string> split_command(const std::string& command);

/// Creates a fresh private directory under `parent`; removed by the returned
/// guard's destructor.
class TempDir {
 public:
  explicit TempDir(const std::filesystem::path& parent = std::filesystem::temp_directory_path());
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace trajeval::util
