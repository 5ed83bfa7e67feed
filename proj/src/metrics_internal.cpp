#include <cmath>
#include <map>

#include "clustop/cluster.hpp"
#include "clustop/error.hpp"
#include "clustop/kernels.hpp"
#include "clustop/metrics.hpp"

namespace clustop {

namespace {

// Non-noise points grouped into dense cluster ids 0..k-1.
struct Groups {
  std::vector<std::size_t> points;   // original row indices
  std::vector<std::size_t> cluster;  // dense id per entry of `points`
  std::vector<std::size_t> sizes;
};

Groups group(const EmbeddingMatrix& y, LabelView labels, const char* what) {
  if (labels.size() != y.rows()) throw InvalidArgument(std::string(what) + ": label length mismatch");
  std::map<int, std::size_t> dense;
  for (int l : labels) {
    if (l != kNoise) dense.emplace(l, 0);
  }
  if (dense.size() < 2) throw InvalidArgument(std::string(what) + ": need at least two clusters");
  std::size_t next = 0;
  for (auto& [label, id] : dense) id = next++;
  Groups g;
  g.sizes.assign(dense.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoise) continue;
    const std::size_t c = dense[labels[i]];
    g.points.push_back(i);
    g.cluster.push_back(c);
    ++g.sizes[c];
  }
  return g;
}

std::vector<double> centroids(const EmbeddingMatrix& y, const Groups& g) {
  const std::size_t d = y.cols();
  std::vector<double> c(g.sizes.size() * d, 0.0);
  for (std::size_t p = 0; p < g.points.size(); ++p) {
    const auto row = y.row(g.points[p]);
    for (std::size_t j = 0; j < d; ++j) c[g.cluster[p] * d + j] += row[j];
  }
  for (std::size_t k = 0; k < g.sizes.size(); ++k) {
    for (std::size_t j = 0; j < d; ++j) c[k * d + j] /= static_cast<double>(g.sizes[k]);
  }
  return c;
}

}  // namespace

double silhouette(const EmbeddingMatrix& y, LabelView labels) {
  const Groups g = group(y, labels, "silhouette");
  const std::size_t m = g.points.size();
  const std::size_t k = g.sizes.size();
  std::vector<double> score(m, 0.0);
#pragma omp parallel
  {
    std::vector<double> sums(k);
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t sp = 0; sp < static_cast<std::ptrdiff_t>(m); ++sp) {
      const auto p = static_cast<std::size_t>(sp);
      const std::size_t own = g.cluster[p];
      if (g.sizes[own] == 1) continue;
      std::fill(sums.begin(), sums.end(), 0.0);
      const auto xi = y.row(g.points[p]);
      for (std::size_t q = 0; q < m; ++q) {
        if (q != p) sums[g.cluster[q]] += euclidean(xi, y.row(g.points[q]));
      }
      const double a = sums[own] / static_cast<double>(g.sizes[own] - 1);
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        if (c != own) b = std::min(b, sums[c] / static_cast<double>(g.sizes[c]));
      }
      const double denom = std::max(a, b);
      score[p] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
  }
  double total = 0.0;
  for (double s : score) total += s;
  return total / static_cast<double>(m);
}

double calinski_harabasz(const EmbeddingMatrix& y, LabelView labels) {
  const Groups g = group(y, labels, "calinski_harabasz");
  const std::size_t d = y.cols();
  const std::size_t m = g.points.size();
  const std::size_t k = g.sizes.size();
  const auto c = centroids(y, g);
  std::vector<double> mean(d, 0.0);
  for (std::size_t i : g.points) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += y(i, j);
  }
  for (double& v : mean) v /= static_cast<double>(m);

  double between = 0.0, within = 0.0;
  for (std::size_t cl = 0; cl < k; ++cl) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = c[cl * d + j] - mean[j];
      s += diff * diff;
    }
    between += static_cast<double>(g.sizes[cl]) * s;
  }
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = y(g.points[p], j) - c[g.cluster[p] * d + j];
      within += diff * diff;
    }
  }
  if (within == 0.0) return 1.0;
  return between * static_cast<double>(m - k) / (within * static_cast<double>(k - 1));
}

double davies_bouldin(const EmbeddingMatrix& y, LabelView labels) {
  const Groups g = group(y, labels, "davies_bouldin");
  const std::size_t d = y.cols();
  const std::size_t k = g.sizes.size();
  const auto c = centroids(y, g);
  auto centroid = [&](std::size_t cl) { return std::span<const double>(c.data() + cl * d, d); };

  std::vector<double> scatter(k, 0.0);
  for (std::size_t p = 0; p < g.points.size(); ++p) {
    scatter[g.cluster[p]] += euclidean(y.row(g.points[p]), centroid(g.cluster[p]));
  }
  for (std::size_t cl = 0; cl < k; ++cl) scatter[cl] /= static_cast<double>(g.sizes[cl]);

  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double sep = euclidean(centroid(i), centroid(j));
      if (sep > 0.0) worst = std::max(worst, (scatter[i] + scatter[j]) / sep);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

}  // namespace clustop
