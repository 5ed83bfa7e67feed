#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace clustop {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs `executable args...` to completion, capturing stdout and stderr.
/// Throws BackendError if the process cannot be started.
ProcessResult run_process(const std::filesystem::path& executable, const std::vector<std::string>& args);

/// Exclusive lock file held for the lifetime of the object.
class LockFile {
 public:
  explicit LockFile(std::filesystem::path path);
  ~LockFile();
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace clustop
