#include "clustop/enhance.hpp"

#include <fstream>
#include <map>
#include <set>
#include <spdlog/spdlog.h>

#include "clustop/error.hpp"
#include "clustop/subprocess.hpp"
#include "clustop/utf8.hpp"

namespace clustop {

using nlohmann::json;
namespace fs = std::filesystem;

PseudoLabelSet select_pseudo_labels(const Corpus& corpus, const ClusterAssignment& assignment) {
  if (assignment.labels.size() != corpus.size()) {
    throw InvalidArgument("assignment length " + std::to_string(assignment.labels.size()) +
                          " does not match corpus size " + std::to_string(corpus.size()));
  }
  std::set<int> distinct;
  for (int l : assignment.labels) {
    if (l != kNoise) distinct.insert(l);
  }
  if (distinct.empty()) throw Error("no pseudo-labels; loosen clustering parameters");
  std::map<int, int> remap;
  for (int l : distinct) remap.emplace(l, static_cast<int>(remap.size()));

  PseudoLabelSet out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const int l = assignment.labels[i];
    if (l == kNoise) continue;
    out.ids.push_back(corpus[i].id());
    out.labels.push_back(remap.at(l));
    out.indices.push_back(i);
  }
  out.k = static_cast<int>(remap.size());
  out.coverage = static_cast<double>(out.ids.size()) / static_cast<double>(corpus.size());
  return out;
}

void write_pseudo_labels(const PseudoLabelSet& set, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (std::size_t i = 0; i < set.ids.size(); ++i) {
    out << json{{"id", set.ids[i]}, {"label", set.labels[i]}}.dump() << '\n';
  }
}

json EnhancementResult::provenance() const {
  json stage_list = json::array();
  for (const auto& s : stages) stage_list.push_back({{"name", s.name}, {"key", s.key}, {"cached", s.cached}});
  return {{"stages", stage_list},
          {"pseudo_labels", {{"k", pseudo.k}, {"count", pseudo.ids.size()}, {"coverage", pseudo.coverage}}}};
}

namespace {

std::string stage_key(const std::string& upstream, const json& params) {
  return utf8::hex64(utf8::fnv1a(upstream + "\n" + params.dump()));
}

json umap_json(const UmapParams& p) {
  return {{"n_neighbors", p.n_neighbors}, {"min_dist", p.min_dist},   {"out_dims", p.out_dims},
          {"n_epochs", p.n_epochs},       {"seed", p.seed},           {"negative_sample_rate", p.negative_sample_rate},
          {"metric", p.metric == Metric::Cosine ? "cosine" : "euclidean"}};
}

/// Runs `produce` into a fresh stage directory unless a completed one exists.
class StageCache {
 public:
  explicit StageCache(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  template <typename F>
  fs::path run(const std::string& name, const std::string& key, std::vector<StageRecord>& log, F&& produce) {
    const fs::path dir = root_ / (name + "-" + key);
    const fs::path done = dir / "done";
    if (fs::exists(done)) {
      spdlog::info("stage {} served from cache ({})", name, dir.string());
      log.push_back({name, key, true});
      return dir;
    }
    fs::remove_all(dir);
    fs::create_directories(dir);
    spdlog::info("stage {} running", name);
    try {
      produce(dir);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
    std::ofstream(done) << key << '\n';
    log.push_back({name, key, false});
    return dir;
  }

 private:
  fs::path root_;
};

EmbeddingMatrix load_checked(const fs::path& path, const Corpus& corpus, const std::string& stage) {
  EmbeddingMatrix m = read_ctem(path);
  if (m.rows() != corpus.size()) {
    throw StageError(stage, "backend emitted " + std::to_string(m.rows()) + " rows for " +
                                std::to_string(corpus.size()) + " documents");
  }
  return m;
}

}  // namespace

EnhancementResult run_enhancement(const Corpus& corpus, const BackendSpec& spec,
                                  const UmapParams& umap_params, const HdbscanParams& hdbscan_params) {
  if (corpus.size() == 0) throw InvalidArgument("empty corpus");
  if (spec.workdir.empty()) throw InvalidArgument("backend working directory is not set");
  fs::create_directories(spec.workdir);
  LockFile lock(spec.workdir / ".backend.lock");

  Backend backend(spec.executable);
  backend.handshake();

  StageCache cache(spec.workdir / "cache");
  EnhancementResult result;
  auto& log = result.stages;

  const fs::path corpus_file = spec.workdir / "cache" / ("corpus-" + corpus.fingerprint() + ".jsonl");
  if (!fs::exists(corpus_file)) {
    const fs::path tmp = corpus_file.string() + ".tmp";
    save_corpus(corpus, tmp);
    fs::rename(tmp, corpus_file);
  }

  // Step 1: original representation.
  const std::string k_embed = stage_key(corpus.fingerprint(), {{"model", spec.model}});
  const fs::path d_embed = cache.run("embed-original", k_embed, log, [&](const fs::path& dir) {
    backend.embed(corpus_file, spec.model, dir / "embeddings.ctem");
    load_checked(dir / "embeddings.ctem", corpus, "embed-original");
  });
  result.original = load_checked(d_embed / "embeddings.ctem", corpus, "embed-original");

  // Step 2: reduction.
  const std::string k_umap = stage_key(k_embed, umap_json(umap_params));
  const fs::path d_umap = cache.run("umap", k_umap, log, [&](const fs::path& dir) {
    write_ctem(umap(result.original, umap_params), dir / "layout.ctem");
  });
  const EmbeddingMatrix layout = read_ctem(d_umap / "layout.ctem");

  // Step 3: clustering and pseudo-label selection.
  const json hdb = {{"min_cluster_size", hdbscan_params.min_cluster_size},
                    {"min_samples", hdbscan_params.effective_min_samples()}};
  const std::string k_cluster = stage_key(k_umap, hdb);
  const fs::path d_cluster = cache.run("hdbscan", k_cluster, log, [&](const fs::path& dir) {
    const auto clusters = hdbscan(layout, hdbscan_params).assignment;
    write_assignment(clusters, corpus, dir / "clusters.jsonl");
    write_pseudo_labels(select_pseudo_labels(corpus, clusters), dir / "pseudo_labels.jsonl");
  });
  {
    std::vector<std::string> ids;
    result.pseudo_clusters = read_assignment(d_cluster / "clusters.jsonl", &ids);
    result.pseudo_clusters.labels = align_labels({ids, result.pseudo_clusters.labels}, [&] {
      std::vector<std::string> v;
      for (const auto& d : corpus.documents()) v.push_back(d.id());
      return v;
    }());
    result.pseudo = select_pseudo_labels(corpus, result.pseudo_clusters);
  }

  // Step 4: fine-tune, then re-embed with the enhanced encoder.
  const json ft = {{"model", spec.model},
                   {"epochs", spec.finetune.epochs},
                   {"lr", spec.finetune.learning_rate},
                   {"batch", spec.finetune.batch_size}};
  const std::string k_ft = stage_key(k_cluster, ft);
  const fs::path d_ft = cache.run("finetune", k_ft, log, [&](const fs::path& dir) {
    backend.finetune(corpus_file, d_cluster / "pseudo_labels.jsonl", spec.model, spec.finetune, dir / "model");
    if (!fs::is_directory(dir / "model")) throw BackendError("finetune produced no model directory");
  });
  const std::string enhanced_model = (d_ft / "model").string();

  const std::string k_enh = stage_key(k_ft, {{"op", "embed"}});
  const fs::path d_enh = cache.run("embed-enhanced", k_enh, log, [&](const fs::path& dir) {
    backend.embed(corpus_file, enhanced_model, dir / "embeddings.ctem");
    load_checked(dir / "embeddings.ctem", corpus, "embed-enhanced");
    if (!fs::exists(Backend::tokens_path_for(dir / "embeddings.ctem"))) {
      throw BackendError("embed wrote no token file beside the embeddings");
    }
  });
  result.enhanced_embedding_path = d_enh / "embeddings.ctem";
  result.enhanced = load_checked(result.enhanced_embedding_path, corpus, "embed-enhanced");
  result.enhanced.set_stage(Stage::Enhanced);
  result.tokenized = attach_tokens(corpus, Backend::tokens_path_for(result.enhanced_embedding_path));

  const std::string k_attn = stage_key(k_ft, {{"op", "attn"}});
  const fs::path d_attn = cache.run("attn-enhanced", k_attn, log, [&](const fs::path& dir) {
    backend.attn(corpus_file, enhanced_model, dir / "beta.jsonl");
  });
  result.beta_path = d_attn / "beta.jsonl";
  try {
    result.profiles = bind_profiles(read_beta_profiles(result.beta_path), result.tokenized);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("attn-enhanced", e.what());
  }
  return result;
}

}  // namespace clustop
