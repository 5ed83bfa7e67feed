#pragma once

#include <cstddef>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "clustop/backend.hpp"
#include "clustop/cluster.hpp"
#include "clustop/corpus.hpp"
#include "clustop/dimred.hpp"
#include "clustop/embedding.hpp"
#include "clustop/topics.hpp"

namespace clustop {

/// Non-noise documents with contiguous labels 0..k-1.
struct PseudoLabelSet {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<std::size_t> indices;  // corpus positions
  int k = 0;
  double coverage = 0.0;
};

/// Keeps every non-noise document. Labels are renumbered in increasing order
/// of the original label. Throws if every document is noise.
PseudoLabelSet select_pseudo_labels(const Corpus& corpus, const ClusterAssignment& assignment);

void write_pseudo_labels(const PseudoLabelSet& set, const std::filesystem::path& path);

struct StageRecord {
  std::string name;
  std::string key;
  bool cached = false;
};

struct EnhancementResult {
  EmbeddingMatrix original;
  EmbeddingMatrix enhanced;
  Corpus tokenized;                   // corpus with the enhanced model's tokens
  std::vector<BetaProfile> profiles;  // bound to `tokenized`
  ClusterAssignment pseudo_clusters;
  PseudoLabelSet pseudo;
  std::vector<StageRecord> stages;
  std::filesystem::path enhanced_embedding_path;
  std::filesystem::path beta_path;

  nlohmann::json provenance() const;
};

/// One round of: embed (original) -> umap -> hdbscan -> pseudo-labels ->
/// finetune -> embed and attn (enhanced). Each stage persists its outputs
/// under `<workdir>/cache/<stage>-<key>` where the key hashes the corpus
/// fingerprint, model id, and every upstream parameter. A stage whose
/// directory is complete is reused instead of re-run.
EnhancementResult run_enhancement(const Corpus& corpus, const BackendSpec& backend,
                                  const UmapParams& umap_params, const HdbscanParams& hdbscan_params);

}  // namespace clustop
