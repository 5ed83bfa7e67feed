#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "clustop/corpus.hpp"
#include "clustop/embedding.hpp"

namespace clustop {

inline constexpr int kNoise = -1;

/// Per-document cluster labels; -1 marks noise, clusters are 0..k-1 and all occupied.
struct ClusterAssignment {
  std::vector<int> labels;
  int k = 0;
  std::string algorithm;
  nlohmann::json params = nlohmann::json::object();

  std::size_t noise_count() const;
  /// Throws InvalidArgument if the label set is not {-1} ∪ {0..k-1} with every cluster used.
  void validate() const;
};

/// Renumbers non-noise labels to 0..k-1 in order of first appearance.
ClusterAssignment make_assignment(std::vector<int> labels, std::string algorithm,
                                  nlohmann::json params);

struct KMeansResult {
  ClusterAssignment assignment;
  EmbeddingMatrix centroids;
  double inertia = 0.0;
  int iterations = 0;
};

/// Lloyd iterations from k-means++ seeding; the best of `n_init` seeded
/// restarts (lowest inertia) is kept. Stops when assignments are stable or
/// after `max_iter` iterations. Empty clusters are re-seeded at the point
/// farthest from its centroid.
KMeansResult kmeans(const EmbeddingMatrix& y, int k, std::uint64_t seed, int n_init = 4,
                    int max_iter = 300);

/// DBSCAN with neighborhoods {j : d(i,j) <= eps} (self included). Core
/// clusters are numbered by their lowest-index core point; a border point
/// joins the cluster of its lowest-index core neighbor.
ClusterAssignment dbscan(const EmbeddingMatrix& y, double eps, int min_samples);

/// Distance from point i to its min_samples-th nearest neighbor (self excluded).
double core_distance(const EmbeddingMatrix& y, std::size_t i, int min_samples);
std::vector<double> core_distances(const EmbeddingMatrix& y, int min_samples);

/// max(core_i, core_j, d(i, j)); zero when i == j.
double mutual_reachability(const EmbeddingMatrix& y, std::size_t i, std::size_t j, int min_samples);
double mutual_reachability(const EmbeddingMatrix& y, std::span<const double> core, std::size_t i,
                           std::size_t j);

struct HdbscanParams {
  int min_cluster_size = 5;
  int min_samples = 0;  // 0 means min_cluster_size

  int effective_min_samples() const { return min_samples > 0 ? min_samples : min_cluster_size; }
};

/// One row of the condensed tree. Ids below `n_points` are points; cluster
/// ids start at `n_points` (the root).
struct CondensedEdge {
  std::size_t parent = 0;
  std::size_t child = 0;
  double lambda = 0.0;
  std::size_t child_size = 0;
};

struct CondensedTree {
  std::size_t n_points = 0;
  std::vector<CondensedEdge> edges;
  /// Indexed by cluster id - n_points.
  std::vector<double> stability;
  std::vector<double> birth_lambda;
  std::vector<std::size_t> parent;  // root's parent is itself
  std::vector<std::size_t> selected;

  std::size_t root() const { return n_points; }
  std::size_t cluster_count() const { return stability.size(); }
  std::vector<std::size_t> children(std::size_t cluster) const;
};

struct HdbscanResult {
  ClusterAssignment assignment;
  CondensedTree tree;
};

/// Prim MST over mutual reachability, single-linkage hierarchy, condensation
/// by min_cluster_size, excess-of-mass selection. The root is only selected
/// when it never splits into two clusters of at least min_cluster_size.
HdbscanResult hdbscan(const EmbeddingMatrix& y, const HdbscanParams& params);

/// Assignment JSONL `{"id","label"}` in corpus order plus a JSON sidecar
/// (`<stem>.meta.json`) holding k, algorithm, params, and noise count.
void write_assignment(const ClusterAssignment& assignment, const Corpus& corpus,
                      const std::filesystem::path& path);
std::filesystem::path assignment_sidecar(const std::filesystem::path& path);

/// Reads `{"id","label"}` JSONL; returns ids and labels in file order.
struct LabeledIds {
  std::vector<std::string> ids;
  std::vector<int> labels;
};
LabeledIds read_labels(const std::filesystem::path& path);

/// Reads an assignment file and its sidecar when present.
ClusterAssignment read_assignment(const std::filesystem::path& path, std::vector<std::string>* ids);

/// Reorders labels from `file` to match `corpus_ids`; throws on any id mismatch.
std::vector<int> align_labels(const LabeledIds& file, const std::vector<std::string>& corpus_ids);

}  // namespace clustop
