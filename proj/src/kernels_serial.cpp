#include <algorithm>
#include <limits>
#include <utility>

#include "clustop/error.hpp"
#include "clustop/kernels.hpp"

namespace clustop::kernels::serial {

std::vector<double> pairwise_distances(const EmbeddingMatrix& x, Metric metric) {
  const std::size_t n = x.rows();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) out[i * n + j] = distance(x.row(i), x.row(j), metric);
    }
  }
  return out;
}

KnnGraph knn(const EmbeddingMatrix& x, std::size_t k, Metric metric) {
  const std::size_t n = x.rows();
  if (k >= n) throw InvalidArgument("knn: k must be smaller than the number of rows");
  KnnGraph g{n, k, std::vector<std::size_t>(n * k), std::vector<double>(n * k)};
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < n; ++i) {
    all.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) all.emplace_back(distance(x.row(i), x.row(j), metric), j);
    }
    std::sort(all.begin(), all.end());
    for (std::size_t r = 0; r < k; ++r) {
      g.distances[i * k + r] = all[r].first;
      g.indices[i * k + r] = all[r].second;
    }
  }
  return g;
}

void distances_from(const EmbeddingMatrix& x, std::size_t i, std::span<double> out, Metric metric) {
  for (std::size_t j = 0; j < x.rows(); ++j) out[j] = distance(x.row(i), x.row(j), metric);
}

std::vector<int> assign_nearest(const EmbeddingMatrix& x, const EmbeddingMatrix& centroids,
                                std::vector<double>& sq_dist) {
  const std::size_t n = x.rows();
  std::vector<int> labels(n, 0);
  sq_dist.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = euclidean(x.row(i), centroids.row(c));
      if (d * d < best) {
        best = d * d;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
    sq_dist[i] = best;
  }
  return labels;
}

}  // namespace clustop::kernels::serial
