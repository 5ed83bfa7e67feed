#include <vector>

#include "clustop/cluster.hpp"
#include "clustop/error.hpp"
#include "clustop/kernels.hpp"

namespace clustop {

ClusterAssignment dbscan(const EmbeddingMatrix& y, double eps, int min_samples) {
  if (!(eps > 0.0)) throw InvalidArgument("dbscan: eps must be positive");
  if (min_samples < 1) throw InvalidArgument("dbscan: min_samples must be at least 1");
  const std::size_t n = y.rows();

  std::vector<std::vector<std::size_t>> neighbors(n);
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    for (std::size_t j = 0; j < n; ++j) {
      if (euclidean(y.row(i), y.row(j)) <= eps) neighbors[i].push_back(j);
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = neighbors[i].size() >= static_cast<std::size_t>(min_samples);
  }

  std::vector<int> labels(n, kNoise);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || labels[i] != kNoise) continue;
    labels[i] = next;
    stack.assign(1, i);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      for (std::size_t q : neighbors[p]) {
        if (core[q] && labels[q] == kNoise) {
          labels[q] = next;
          stack.push_back(q);
        }
      }
    }
    ++next;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (std::size_t q : neighbors[i]) {
      if (core[q]) {
        labels[i] = labels[q];
        break;
      }
    }
  }

  ClusterAssignment a{std::move(labels), next, "dbscan", {{"eps", eps}, {"min_samples", min_samples}}};
  return a;
}

}  // namespace clustop
