#include <limits>
#include <random>
#include <set>

#include "clustop/cluster.hpp"
#include "clustop/error.hpp"
#include "clustop/kernels.hpp"

namespace clustop {

namespace {

// Uniform double in [0, 1) from the raw generator so streams are identical
// across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

EmbeddingMatrix plus_plus_seeds(const EmbeddingMatrix& y, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = y.rows();
  EmbeddingMatrix centers(k, y.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);

  std::size_t pick = static_cast<std::size_t>(rng() % n);
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += d2[i];
      if (total > 0.0) {
        double r = unit(rng) * total;
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          r -= d2[i];
          if (r < 0.0 && d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
        if (pick == n) {  // rounding: take the last positive-weight point
          for (std::size_t i = n; i-- > 0;) {
            if (d2[i] > 0.0) {
              pick = i;
              break;
            }
          }
        }
      } else {
        pick = 0;
        while (pick < n && chosen[pick]) ++pick;
        if (pick == n) pick = 0;
      }
    }
    chosen[pick] = true;
    const auto src = y.row(pick);
    std::copy(src.begin(), src.end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      const double d = euclidean(y.row(i), src);
      d2[i] = std::min(d2[i], d * d);
    }
  }
  return centers;
}

KMeansResult lloyd(const EmbeddingMatrix& y, std::size_t k, std::mt19937_64& rng, int max_iter) {
  const std::size_t n = y.rows();
  const std::size_t d = y.cols();
  EmbeddingMatrix centers = plus_plus_seeds(y, k, rng);
  std::vector<int> labels;
  std::vector<double> sq;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    auto next = kernels::omp::assign_nearest(y, centers, sq);
    const bool stable = next == labels;
    labels = std::move(next);
    if (stable) break;

    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(labels[i]);
      ++counts[c];
      const auto row = y.row(i);
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += row[j];
    }
    std::set<std::size_t> reseeded;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (sq[i] > far_d && !reseeded.contains(i)) {
            far_d = sq[i];
            far = i;
          }
        }
        reseeded.insert(far);
        const auto src = y.row(far);
        std::copy(src.begin(), src.end(), centers.row(c).begin());
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) {
        centers(c, j) = sums[c * d + j] / static_cast<double>(counts[c]);
      }
    }
  }
  kernels::omp::assign_nearest(y, centers, sq);
  double inertia = 0.0;
  for (double v : sq) inertia += v;

  // Renumber clusters by first appearance and permute centroids to match.
  std::vector<int> remap(k, -1);
  int used = 0;
  for (int& l : labels) {
    if (remap[l] < 0) remap[l] = used++;
    l = remap[l];
  }
  EmbeddingMatrix ordered(static_cast<std::size_t>(used), d);
  for (std::size_t c = 0; c < k; ++c) {
    if (remap[c] < 0) continue;
    const auto src = centers.row(c);
    std::copy(src.begin(), src.end(), ordered.row(static_cast<std::size_t>(remap[c])).begin());
  }
  ClusterAssignment assignment{std::move(labels), used, "kmeans", {}};
  return {std::move(assignment), std::move(ordered), inertia, iter};
}

}  // namespace

KMeansResult kmeans(const EmbeddingMatrix& y, int k, std::uint64_t seed, int n_init, int max_iter) {
  if (k < 1 || static_cast<std::size_t>(k) > y.rows()) {
    throw InvalidArgument("kmeans: k must be in [1, n]");
  }
  if (n_init < 1 || max_iter < 1) throw InvalidArgument("kmeans: n_init and max_iter must be positive");
  std::mt19937_64 rng(seed);
  KMeansResult best;
  for (int run = 0; run < n_init; ++run) {
    KMeansResult r = lloyd(y, static_cast<std::size_t>(k), rng, max_iter);
    if (run == 0 || r.inertia < best.inertia) best = std::move(r);
  }
  best.assignment.params = {{"k", k}, {"seed", seed}, {"n_init", n_init}, {"max_iter", max_iter}};
  return best;
}

}  // namespace clustop
