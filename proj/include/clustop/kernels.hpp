#pragma once

// Data-parallel distance kernels. Each routine exists twice: `serial::` is the
// straightforward reference used by tests, `omp::` is the OpenMP version the
// library calls. Both produce bitwise-identical results because every
// per-pair distance goes through the same scalar function and neighbor ties
// are broken by index.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "clustop/embedding.hpp"

namespace clustop {

enum class Metric { Euclidean, Cosine };

inline double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return std::sqrt(s);
}

inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    dot += a[j] * b[j];
    na += a[j] * a[j];
    nb += b[j] * b[j];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double d = 1.0 - dot / std::sqrt(na * nb);
  return d < 0.0 ? 0.0 : d;
}

inline double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  return metric == Metric::Cosine ? cosine_distance(a, b) : euclidean(a, b);
}

/// k nearest neighbors per row, self excluded, sorted by (distance, index).
struct KnnGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::size_t> indices;  // n*k
  std::vector<double> distances;     // n*k

  std::span<const std::size_t> neighbors(std::size_t i) const { return {indices.data() + i * k, k}; }
  std::span<const double> dists(std::size_t i) const { return {distances.data() + i * k, k}; }
};

namespace kernels {

namespace serial {
std::vector<double> pairwise_distances(const EmbeddingMatrix& x, Metric metric);
KnnGraph knn(const EmbeddingMatrix& x, std::size_t k, Metric metric);
void distances_from(const EmbeddingMatrix& x, std::size_t i, std::span<double> out, Metric metric);
/// Index of the nearest centroid (lowest index on ties) and its squared distance.
std::vector<int> assign_nearest(const EmbeddingMatrix& x, const EmbeddingMatrix& centroids,
                                std::vector<double>& sq_dist);
}  // namespace serial

namespace omp {
std::vector<double> pairwise_distances(const EmbeddingMatrix& x, Metric metric);
KnnGraph knn(const EmbeddingMatrix& x, std::size_t k, Metric metric);
void distances_from(const EmbeddingMatrix& x, std::size_t i, std::span<double> out, Metric metric);
std::vector<int> assign_nearest(const EmbeddingMatrix& x, const EmbeddingMatrix& centroids,
                                std::vector<double>& sq_dist);
}  // namespace omp

}  // namespace kernels
}  // namespace clustop
