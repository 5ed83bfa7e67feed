#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

namespace clustop {

struct FinetuneParams {
  int epochs = 20;
  double learning_rate = 2e-5;
  int batch_size = 16;
};

/// How to reach the model backend subprocess.
struct BackendSpec {
  std::filesystem::path executable;
  std::string model;
  FinetuneParams finetune;
  std::filesystem::path workdir;
};

/// `explicit_path` if given, else $CLUSTOP_BACKEND; throws if neither is set.
std::filesystem::path resolve_backend_executable(const std::optional<std::filesystem::path>& explicit_path);

/// Client for the backend subprocess protocol:
///   <backend> --capabilities
///   <backend> embed --corpus C --model M --out X.ctem   (also writes X.tokens.jsonl)
///   <backend> attn --corpus C --model M --out B.jsonl
///   <backend> finetune --corpus C --labels L --model M --epochs E --lr R --batch B --out-model D
/// Every call throws BackendError on a nonzero exit, quoting the captured stderr.
class Backend {
 public:
  explicit Backend(std::filesystem::path executable);

  /// Runs the handshake and checks protocol 1 with embed, attn, and finetune.
  nlohmann::json handshake() const;

  void embed(const std::filesystem::path& corpus, const std::string& model,
             const std::filesystem::path& out) const;
  void attn(const std::filesystem::path& corpus, const std::string& model,
            const std::filesystem::path& out) const;
  void finetune(const std::filesystem::path& corpus, const std::filesystem::path& labels,
                const std::string& model, const FinetuneParams& params,
                const std::filesystem::path& out_model) const;

  const std::filesystem::path& executable() const { return executable_; }

  /// Token JSONL written next to an embedding file: `X.ctem` -> `X.tokens.jsonl`.
  static std::filesystem::path tokens_path_for(const std::filesystem::path& ctem);

 private:
  void invoke(const std::string& op, const std::vector<std::string>& args) const;

  std::filesystem::path executable_;
};

}  // namespace clustop
