#include <algorithm>
#include <numeric>
#include <vector>

#include "clustop/dimred.hpp"
#include "clustop/error.hpp"

namespace clustop {

double trustworthiness(const EmbeddingMatrix& high, const EmbeddingMatrix& low, int k) {
  const std::size_t n = high.rows();
  if (low.rows() != n) throw InvalidArgument("trustworthiness: row counts differ");
  if (k < 1 || 2 * static_cast<std::size_t>(k) >= n) {
    throw InvalidArgument("trustworthiness: k must satisfy 1 <= k < n/2");
  }
  const auto uk = static_cast<std::size_t>(k);
  const KnnGraph low_knn = kernels::omp::knn(low, uk, Metric::Euclidean);

  double penalty = 0.0;
#pragma omp parallel
  {
    std::vector<std::size_t> order(n);
    std::vector<std::size_t> rank(n);
    std::vector<double> dist(n);
#pragma omp for schedule(static) reduction(+ : penalty)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
      const auto i = static_cast<std::size_t>(si);
      for (std::size_t j = 0; j < n; ++j) dist[j] = euclidean(high.row(i), high.row(j));
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (a == i || b == i) return a == i && b != i;  // self first
        return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
      });
      // rank[j] = 1-based position of j among i's high-space neighbors.
      for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;
      double row_penalty = 0.0;
      for (std::size_t j : low_knn.neighbors(i)) {
        if (rank[j] > uk) row_penalty += static_cast<double>(rank[j] - uk);
      }
      penalty += row_penalty;
    }
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * penalty;
}

}  // namespace clustop
