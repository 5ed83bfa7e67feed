#include <algorithm>
#include <limits>
#include <queue>
#include <utility>

#include "clustop/error.hpp"
#include "clustop/kernels.hpp"

namespace clustop::kernels::omp {

std::vector<double> pairwise_distances(const EmbeddingMatrix& x, Metric metric) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  std::vector<double> out(x.rows() * x.rows(), 0.0);
  // Fill the upper triangle and mirror; dynamic schedule balances the triangle.
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t j = i + 1; j < n; ++j) {
      const double d = distance(x.row(i), x.row(j), metric);
      out[i * n + j] = d;
      out[j * n + i] = d;
    }
  }
  return out;
}

KnnGraph knn(const EmbeddingMatrix& x, std::size_t k, Metric metric) {
  const std::size_t n = x.rows();
  if (k >= n) throw InvalidArgument("knn: k must be smaller than the number of rows");
  KnnGraph g{n, k, std::vector<std::size_t>(n * k), std::vector<double>(n * k)};
  using Entry = std::pair<double, std::size_t>;

#pragma omp parallel
  {
    std::vector<Entry> heap;
    heap.reserve(k + 1);
#pragma omp for schedule(static)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
      const auto i = static_cast<std::size_t>(si);
      heap.clear();
      // Max-heap on (distance, index) keeps the k lexicographically smallest.
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const Entry e{distance(x.row(i), x.row(j), metric), j};
        if (heap.size() < k) {
          heap.push_back(e);
          std::push_heap(heap.begin(), heap.end());
        } else if (e < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = e;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      std::sort_heap(heap.begin(), heap.end());
      for (std::size_t r = 0; r < k; ++r) {
        g.distances[i * k + r] = heap[r].first;
        g.indices[i * k + r] = heap[r].second;
      }
    }
  }
  return g;
}

void distances_from(const EmbeddingMatrix& x, std::size_t i, std::span<double> out, Metric metric) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) out[j] = distance(x.row(i), x.row(j), metric);
}

std::vector<int> assign_nearest(const EmbeddingMatrix& x, const EmbeddingMatrix& centroids,
                                std::vector<double>& sq_dist) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  std::vector<int> labels(x.rows(), 0);
  sq_dist.assign(x.rows(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
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

}  // namespace clustop::kernels::omp
