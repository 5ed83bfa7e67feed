#pragma once

#include <cstddef>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clustop/cluster.hpp"
#include "clustop/corpus.hpp"

namespace clustop {

/// Head-averaged self-attention of one sentence in one layer. Entry (i, j)
/// is the attention from token i to token j; rows sum to one.
class AttentionMatrix {
 public:
  AttentionMatrix(std::size_t n, std::vector<double> values);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  const std::vector<double>& values() const { return values_; }

  /// Largest |row sum - 1|.
  double max_row_deviation() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// Column sums of the attention matrix: the attention each token receives.
/// Throws if any row sum deviates from 1 by more than 1e-3 or an entry is negative.
std::vector<double> compute_beta(const AttentionMatrix& alpha);

struct TokenAggregation {
  std::vector<std::vector<double>> per_token;  // e_i = sum_j alpha_ij v_j
  std::vector<double> sentence;                // mean of e_i
};

/// Attention-weighted value sums. `values` is n×d row-major.
TokenAggregation aggregate_token_values(const AttentionMatrix& alpha, std::span<const double> values,
                                        std::size_t dims);

/// Sentence vector computed as (1/n) sum_j beta_j v_j.
std::vector<double> sentence_vector_from_beta(std::span<const double> beta,
                                              std::span<const double> values, std::size_t dims);

/// Per-document beta values for every layer, with the special-token mask of
/// the document's tokenization.
struct BetaProfile {
  std::string id;
  std::vector<std::vector<double>> beta;  // [layer][token]
  std::vector<bool> special;

  std::size_t layers() const { return beta.size(); }
  std::size_t tokens() const { return beta.empty() ? 0 : beta.front().size(); }
};

/// Reads BetaProfile JSONL `{"id","layers","beta":[[...],...]}`.
std::vector<BetaProfile> read_beta_profiles(const std::filesystem::path& path);
void write_beta_profiles(const std::vector<BetaProfile>& profiles, const std::filesystem::path& path);

/// Orders profiles by corpus order, copies special-token masks, and checks
/// token counts, layer counts, and that each layer sums to the token count (±1e-3).
std::vector<BetaProfile> bind_profiles(std::vector<BetaProfile> profiles, const Corpus& corpus);

struct LayerStat {
  double cov = 0.0;   // coefficient of variation
  double kurt = 0.0;  // excess kurtosis (population moments)
  double rr = 0.0;    // relative range
  std::size_t sentences = 0;       // contributing to cov and rr
  std::size_t kurt_sentences = 0;  // contributing to kurt
};

struct LayerStats {
  std::vector<LayerStat> layers;
};

/// Statistics of non-special beta values, averaged over sentences. Sentences
/// with fewer than three non-special tokens or constant beta are skipped for
/// kurtosis; a layer with no contributing sentence reports 0.
LayerStats layer_stats(std::span<const BetaProfile> profiles);

/// Layer with the highest mean kurtosis; ties go to higher cov, then higher rr,
/// then the lower index. An override is returned as-is after a range check.
std::size_t select_layer(const LayerStats& stats, std::optional<int> override_layer = std::nullopt);

/// Argmax of beta over non-special tokens in `layer`; ties go to the lower index.
std::optional<std::size_t> key_token(const BetaProfile& profile, std::size_t layer);

/// The segmented word containing the token's span, or nullopt when the token
/// is special or not contained in exactly one word.
std::optional<std::string> token_to_word(const Document& doc, std::size_t token_index);

struct ClusterTopics {
  int label = 0;
  std::vector<std::pair<std::string, double>> words;
  std::size_t unmapped = 0;
};

struct TopicReport {
  std::string method;  // "attention" or "ctfidf"
  std::optional<int> layer;
  std::vector<ClusterTopics> clusters;

  nlohmann::json to_json() const;
};

void write_topic_report(const TopicReport& report, const std::filesystem::path& path);

/// Frequency-ranked keywords per non-noise cluster; ties keep first-occurrence
/// order. Documents whose keyword is nullopt count as unmapped.
TopicReport cluster_topics(const ClusterAssignment& assignment,
                           std::span<const std::optional<std::string>> keywords, int top_k);

/// Full attention path: layer stats, layer choice, key tokens, word mapping, ranking.
TopicReport attention_topics(const Corpus& corpus, std::span<const BetaProfile> profiles,
                             const ClusterAssignment& assignment, int top_k,
                             std::optional<int> layer_override = std::nullopt);

/// Class-based TF-IDF over segmented words of non-noise documents:
/// score(w, c) = tf(w, c) / |c| * log(1 + A / f(w)).
TopicReport ctfidf_topics(const Corpus& corpus, const ClusterAssignment& assignment, int top_k);

}  // namespace clustop
