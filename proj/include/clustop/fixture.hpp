#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clustop/corpus.hpp"
#include "clustop/embedding.hpp"
#include "clustop/topics.hpp"

namespace clustop {

/// Deterministic stand-in for a real encoder. Each document's hidden class is
/// its first word found in `markers`. Embeddings are a per-class centroid
/// plus isotropic noise, wide in original mode and tight in enhanced mode.
struct FixtureOptions {
  std::vector<std::string> markers;
  std::uint64_t seed = 7;
  std::size_t dims = 16;
  double centroid_scale = 4.0;
  double original_noise = 3.0;
  double enhanced_noise = 0.4;
  std::size_t layers = 12;
  std::size_t peaked_layer = 10;
  bool drop_last_row = false;   // emit n-1 embedding rows
  std::string fail_op;          // op that exits nonzero, for error-path tests

  /// Parses `fixture:markers=a,b,c;seed=7;drop_last=1;fail=embed`.
  static FixtureOptions parse(std::string_view model_id);
  std::string model_id() const;
};

/// A model reference resolved to options plus the stage it embeds with. A
/// fine-tuned model is a directory holding `fixture_model.json`.
struct FixtureModel {
  FixtureOptions options;
  Stage stage = Stage::Original;
};
FixtureModel resolve_fixture_model(const std::string& model);

/// Writes a fine-tuned model directory. The label file must name corpus ids
/// with labels >= 0.
void fixture_finetune(const Corpus& corpus, const std::filesystem::path& labels,
                      const FixtureModel& base, int epochs, const std::filesystem::path& out_dir);

/// [CLS], each word split into pieces of at most two code points, [SEP].
std::vector<Token> fixture_tokenize(const Document& doc);

/// Index into `markers` of the document's class, if it has a marker word.
std::optional<std::size_t> fixture_class(const Document& doc, const FixtureOptions& options);

std::vector<double> fixture_centroid(std::string_view marker, const FixtureOptions& options);

EmbeddingMatrix fixture_embed(const Corpus& corpus, Stage stage, const FixtureOptions& options);

/// One profile per document over its fixture tokens. The peaked layer puts
/// 0.9 of the mass on the marker word's first token; everything else is
/// uniform (beta = 1 per token). Documents without a marker are uniform.
std::vector<BetaProfile> fixture_attention(const Corpus& tokenized, const FixtureOptions& options);

/// Copy of `corpus` with fixture tokens attached.
Corpus fixture_tokenized(const Corpus& corpus);

struct PlantedCorpus {
  Corpus corpus;
  std::vector<int> classes;
};

/// Documents of shared filler words with one marker each; document i
/// belongs to class i % markers.size().
PlantedCorpus make_planted_corpus(const std::vector<std::string>& markers, std::size_t docs_per_class,
                                  std::uint64_t seed, std::size_t filler_words = 8);

}  // namespace clustop
