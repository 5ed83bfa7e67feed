#pragma once

#include <cstddef>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clustop/embedding.hpp"

namespace clustop {

using LabelView = std::span<const int>;

/// Co-occurrence counts between two labelings of the same items. Every
/// distinct label, including -1, is its own row/column.
class ContingencyTable {
 public:
  ContingencyTable(LabelView a, LabelView b);

  std::size_t rows() const { return row_labels_.size(); }
  std::size_t cols() const { return col_labels_.size(); }
  std::int64_t operator()(std::size_t r, std::size_t c) const { return counts_[r * cols() + c]; }
  std::int64_t row_sum(std::size_t r) const { return row_sums_[r]; }
  std::int64_t col_sum(std::size_t c) const { return col_sums_[c]; }
  std::int64_t total() const { return total_; }
  const std::vector<int>& row_labels() const { return row_labels_; }
  const std::vector<int>& col_labels() const { return col_labels_; }

 private:
  std::vector<int> row_labels_, col_labels_;
  std::vector<std::int64_t> counts_, row_sums_, col_sums_;
  std::int64_t total_ = 0;
};

/// Adjusted Rand index; 1.0 when both labelings are trivial (max == expected).
double ari(LabelView a, LabelView b);

enum class MiVariant { Nmi, Ami };

/// Mutual information in nats.
double mutual_info(const ContingencyTable& table);
double entropy(std::span<const std::int64_t> counts, std::int64_t total);
/// E[MI] under the hypergeometric permutation model.
double expected_mutual_info(const ContingencyTable& table);

/// NMI = MI / mean(H); AMI = (MI - E[MI]) / (mean(H) - E[MI]). A zero
/// denominator yields 1.0 if the two partitions coincide, else 0.0.
double mutual_info_family(LabelView a, LabelView b, MiVariant variant);
inline double nmi(LabelView a, LabelView b) { return mutual_info_family(a, b, MiVariant::Nmi); }
inline double ami(LabelView a, LabelView b) { return mutual_info_family(a, b, MiVariant::Ami); }

/// Fraction of items in the majority true class of their predicted cluster;
/// noise (-1) forms one cluster of its own.
double purity(LabelView pred, LabelView truth);

struct PairScores {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Pair-counting precision/recall/accuracy/F1 over all unordered pairs.
/// A pair with a noise prediction is predicted-separate. 0/0 ratios are 0.
PairScores pair_scores(LabelView pred, LabelView truth);

/// Internal metrics; noise points are excluded, at least two clusters must remain.
double silhouette(const EmbeddingMatrix& y, LabelView labels);
double calinski_harabasz(const EmbeddingMatrix& y, LabelView labels);
double davies_bouldin(const EmbeddingMatrix& y, LabelView labels);

struct ScoreReport {
  std::optional<double> ari, ami, nmi, purity, pair_precision, pair_recall, pair_accuracy, pair_f1,
      silhouette, calinski_harabasz, davies_bouldin;
  nlohmann::json provenance = nlohmann::json::object();

  /// Flat JSON object; missing scores are omitted.
  nlohmann::json to_json() const;
  /// Fixed-order two-column table; missing scores print as "-".
  std::string to_table() const;
};

/// External scores vs reference labels.
void fill_external(ScoreReport& report, LabelView pred, LabelView truth);
/// Internal scores on an embedding; skipped silently when fewer than two clusters remain.
void fill_internal(ScoreReport& report, const EmbeddingMatrix& y, LabelView pred);

}  // namespace clustop
