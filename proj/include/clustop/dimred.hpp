#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "clustop/embedding.hpp"
#include "clustop/kernels.hpp"

namespace clustop {

/// Projects mean-centered rows onto the top-k principal components.
/// Components are ordered by descending variance; each component's
/// largest-magnitude coordinate is positive. Constant input yields zeros.
EmbeddingMatrix pca(const EmbeddingMatrix& x, int k);

/// Exact k-NN graph, self excluded, ties broken by lower index.
KnnGraph knn_graph(const EmbeddingMatrix& x, int k, Metric metric = Metric::Euclidean);

struct SmoothKnn {
  double rho = 0.0;
  double sigma = 0.0;
};

/// Local connectivity calibration for one point. `distances` must be sorted
/// ascending and hold at least two entries. sigma solves
/// sum_i exp(-max(0, d_i - rho) / sigma) = log2(k) to 1e-5, clamped to
/// [1e-3, 1e3] times mean(d) (mean(d) = 1 when all distances are zero).
SmoothKnn smooth_knn(std::span<const double> distances);

/// Probabilistic t-conorm a + b - ab.
double fuzzy_union(double a, double b);

/// Parameters of the low-dimensional similarity curve 1 / (1 + a d^(2b)).
struct CurveParams {
  double a = 0.0;
  double b = 0.0;
};

/// Least-squares fit of the curve to the piecewise target defined by
/// `min_dist` and `spread`. Results are cached per (min_dist, spread).
CurveParams fit_curve(double min_dist, double spread = 1.0);

struct WeightedEdge {
  std::size_t head = 0;
  std::size_t tail = 0;
  double weight = 0.0;
};

/// Symmetric fuzzy neighborhood graph; both directions of every edge are
/// listed, sorted by (head, tail).
struct FuzzyGraph {
  std::size_t n = 0;
  std::vector<WeightedEdge> edges;
};

FuzzyGraph fuzzy_simplicial_set(const KnnGraph& knn);

struct UmapParams {
  int n_neighbors = 15;
  double min_dist = 0.1;
  int out_dims = 2;
  int n_epochs = 0;  // 0 selects 500 for n <= 10k, 200 otherwise
  std::uint64_t seed = 42;
  int negative_sample_rate = 5;
  Metric metric = Metric::Euclidean;
  /// Run the optimizer with OpenMP. Results are then not reproducible.
  bool parallel = false;
};

/// Spectral layout of the fuzzy graph scaled to [0, 10] per axis. Falls back
/// to seeded Gaussian noise times 1e-2 when the eigensolver fails.
EmbeddingMatrix spectral_layout(const FuzzyGraph& graph, int dims, std::uint64_t seed);

EmbeddingMatrix umap(const EmbeddingMatrix& x, const UmapParams& params);

/// Neighborhood-preservation score in [0, 1]; requires k < n / 2.
double trustworthiness(const EmbeddingMatrix& high, const EmbeddingMatrix& low, int k);

}  // namespace clustop
