#include "clustop/subprocess.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "clustop/error.hpp"

namespace clustop {

namespace {

std::string slurp_fd(int fd) {
  std::string out;
  ::lseek(fd, 0, SEEK_SET);
  char buf[4096];
  ssize_t got = 0;
  while ((got = ::read(fd, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(got));
  return out;
}

int temp_fd() {
  char name[] = "/tmp/clustop-proc-XXXXXX";
  const int fd = ::mkstemp(name);
  if (fd < 0) throw BackendError(std::string("mkstemp failed: ") + std::strerror(errno));
  ::unlink(name);
  return fd;
}

}  // namespace

ProcessResult run_process(const std::filesystem::path& executable, const std::vector<std::string>& args) {
  const int out_fd = temp_fd();
  const int err_fd = temp_fd();

  std::vector<std::string> argv_store;
  argv_store.push_back(executable.string());
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(out_fd);
    ::close(err_fd);
    throw BackendError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(out_fd, STDOUT_FILENO);
    ::dup2(err_fd, STDERR_FILENO);
    ::execv(argv[0], argv.data());
    const std::string msg = std::string("exec failed: ") + std::strerror(errno) + "\n";
    [[maybe_unused]] auto ignored = ::write(STDERR_FILENO, msg.data(), msg.size());
    ::_exit(127);
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw BackendError(std::string("waitpid failed: ") + std::strerror(errno));
  }
  ProcessResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  result.out = slurp_fd(out_fd);
  result.err = slurp_fd(err_fd);
  ::close(out_fd);
  ::close(err_fd);
  return result;
}

LockFile::LockFile(std::filesystem::path path) : path_(std::move(path)) {
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw BackendError("backend working directory is locked (" + path_.string() +
                       "); another backend process is running");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto ignored = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

LockFile::~LockFile() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace clustop
