#include "clustop/backend.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <spdlog/spdlog.h>

#include "clustop/error.hpp"
#include "clustop/subprocess.hpp"

namespace clustop {

namespace {

std::string tail(const std::string& s, std::size_t max = 2000) {
  return s.size() <= max ? s : "..." + s.substr(s.size() - max);
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::filesystem::path resolve_backend_executable(const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path && !explicit_path->empty()) return *explicit_path;
  if (const char* env = std::getenv("CLUSTOP_BACKEND"); env && *env) return env;
  throw InvalidArgument("no backend executable: pass --backend or set CLUSTOP_BACKEND");
}

Backend::Backend(std::filesystem::path executable) : executable_(std::move(executable)) {
  if (!std::filesystem::exists(executable_)) {
    throw BackendError("backend executable not found: " + executable_.string());
  }
}

void Backend::invoke(const std::string& op, const std::vector<std::string>& args) const {
  spdlog::debug("backend {} {}", executable_.string(), op);
  const ProcessResult r = run_process(executable_, args);
  if (r.exit_code != 0) {
    throw BackendError("backend " + op + " exited with status " + std::to_string(r.exit_code) + ": " +
                       tail(r.err));
  }
}

nlohmann::json Backend::handshake() const {
  const ProcessResult r = run_process(executable_, {"--capabilities"});
  if (r.exit_code != 0) {
    throw BackendError("backend --capabilities exited with status " + std::to_string(r.exit_code) +
                       ": " + tail(r.err));
  }
  nlohmann::json caps;
  try {
    caps = nlohmann::json::parse(r.out);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("backend capabilities are not JSON: ") + e.what());
  }
  if (caps.value("protocol", 0) != 1) throw BackendError("backend speaks an unsupported protocol");
  const auto ops = caps.value("ops", std::vector<std::string>{});
  for (const char* needed : {"embed", "attn", "finetune"}) {
    if (std::find(ops.begin(), ops.end(), needed) == ops.end()) {
      throw BackendError(std::string("backend lacks operation ") + needed);
    }
  }
  return caps;
}

void Backend::embed(const std::filesystem::path& corpus, const std::string& model,
                    const std::filesystem::path& out) const {
  invoke("embed", {"embed", "--corpus", corpus.string(), "--model", model, "--out", out.string()});
}

void Backend::attn(const std::filesystem::path& corpus, const std::string& model,
                   const std::filesystem::path& out) const {
  invoke("attn", {"attn", "--corpus", corpus.string(), "--model", model, "--out", out.string()});
}

void Backend::finetune(const std::filesystem::path& corpus, const std::filesystem::path& labels,
                       const std::string& model, const FinetuneParams& p,
                       const std::filesystem::path& out_model) const {
  invoke("finetune", {"finetune", "--corpus", corpus.string(), "--labels", labels.string(), "--model",
                      model, "--epochs", std::to_string(p.epochs), "--lr", format_real(p.learning_rate),
                      "--batch", std::to_string(p.batch_size), "--out-model", out_model.string()});
}

std::filesystem::path Backend::tokens_path_for(const std::filesystem::path& ctem) {
  auto p = ctem;
  p.replace_extension(".tokens.jsonl");
  return p;
}

}  // namespace clustop
