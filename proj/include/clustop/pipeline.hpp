#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clustop/backend.hpp"
#include "clustop/cluster.hpp"
#include "clustop/dimred.hpp"
#include "clustop/metrics.hpp"
#include "clustop/topics.hpp"

namespace clustop {

enum class Reducer { Pca, Umap };
enum class Clusterer { Kmeans, Dbscan, Hdbscan };
enum class TopicMethod { Attention, Ctfidf };
enum class Objective { Nmi, Silhouette };

std::string_view to_string(Reducer r);
std::string_view to_string(Clusterer c);
std::string_view to_string(TopicMethod t);
std::string_view to_string(Objective o);
Reducer parse_reducer(std::string_view s);
Clusterer parse_clusterer(std::string_view s);
TopicMethod parse_topic_method(std::string_view s);
Objective parse_objective(std::string_view s);

/// Everything a run needs. Keys of `to_config_text` match the long flags of
/// the command line one to one.
struct PipelineConfig {
  std::filesystem::path corpus;
  BackendSpec backend;  // empty workdir means <out>/work

  Reducer reducer = Reducer::Umap;
  int out_dims = 5;
  int n_neighbors = 15;
  double min_dist = 0.1;
  int umap_epochs = 0;

  Clusterer clusterer = Clusterer::Hdbscan;
  int k = 8;
  double eps = 0.5;
  int min_cluster_size = 5;
  int min_samples = 0;  // 0 means min_cluster_size; dbscan uses the same rule

  // Enhancement-round parameters; 0 inherits the value above.
  int enhance_n_neighbors = 0;
  int enhance_out_dims = 0;
  int enhance_min_cluster_size = 0;

  TopicMethod topic_method = TopicMethod::Attention;
  int top_k = 10;
  std::optional<int> layer;
  std::optional<std::filesystem::path> labels;
  std::filesystem::path out_dir = "clustop-out";
  std::uint64_t seed = 42;

  /// Checks paths and parameter ranges; throws InvalidArgument.
  void validate() const;

  UmapParams umap_params() const;
  UmapParams enhance_umap_params() const;
  HdbscanParams hdbscan_params() const;
  HdbscanParams enhance_hdbscan_params() const;
  std::filesystem::path workdir() const;

  nlohmann::json to_json() const;
  /// Flat `key = value` text, replayable with `clustop run --config`.
  std::string to_config_text() const;
};

/// Reduce with the configured reducer.
EmbeddingMatrix reduce(const EmbeddingMatrix& x, const PipelineConfig& config);
/// Cluster with the configured clusterer.
ClusterAssignment cluster(const EmbeddingMatrix& y, const PipelineConfig& config);

struct RunArtifacts {
  std::filesystem::path assignment, topics, scores, plot, manifest;
  ClusterAssignment assignment_value;
  TopicReport topics_value;
  ScoreReport scores_value;
};

/// enhance -> reduce -> cluster -> topics, then writes assignment.jsonl,
/// topics.json, scores.json, plot.svg, manifest.json, and run.conf into the
/// output directory. Stage failures surface as StageError.
RunArtifacts cmd_run(const PipelineConfig& config);

struct SweepGrid {
  std::vector<int> n_neighbors;
  std::vector<int> min_cluster_size;
  std::vector<double> eps;
  std::optional<Objective> objective;  // default: nmi with labels, else silhouette
};

struct SweepRow {
  std::optional<int> n_neighbors;
  std::optional<int> min_cluster_size;
  std::optional<double> eps;
  int k = 0;
  std::size_t noise = 0;
  double objective = 0.0;  // NaN when the combination failed or is undefined
};

struct SweepResult {
  Objective objective = Objective::Nmi;
  std::vector<SweepRow> rows;  // grid order
  std::size_t best = 0;        // index into rows
  std::filesystem::path csv;
};

/// Number of combinations the grid spans for this reducer and clusterer.
std::size_t sweep_size(const SweepGrid& grid, Reducer reducer, Clusterer clusterer);

/// Evaluates every applicable combination on the enhanced embedding, writes
/// sweep.csv and sweep_best.json, and returns the table. Ranking: objective
/// descending, then fewer noise points, then smaller n_neighbors.
SweepResult cmd_sweep(const PipelineConfig& config, const SweepGrid& grid);

/// "a:b:step" (inclusive) or "a,b,c".
std::vector<int> parse_int_list(std::string_view text);
std::vector<double> parse_real_list(std::string_view text);

/// External scores vs labels and, when an embedding is given, internal scores.
ScoreReport cmd_eval(const std::filesystem::path& assignment, const std::filesystem::path& labels,
                     const std::optional<std::filesystem::path>& embedding);

/// Renders a 2-D embedding to SVG; rows follow the assignment file order.
void cmd_plot(const std::filesystem::path& embedding, const std::filesystem::path& assignment,
              const std::optional<std::filesystem::path>& labels, const std::filesystem::path& out);

struct CheckItem {
  std::string name;
  bool ok = false;
  std::string detail;
};

/// Handshake plus one round of every protocol operation on `corpus`, with
/// schema checks of each output.
std::vector<CheckItem> backend_check(const BackendSpec& backend, const std::filesystem::path& corpus);

}  // namespace clustop
