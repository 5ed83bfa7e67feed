#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "clustop/cluster.hpp"
#include "clustop/dimred.hpp"
#include "clustop/error.hpp"
#include "clustop/kernels.hpp"
#include "clustop/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace clustop;

namespace {

EmbeddingMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  EmbeddingMatrix m(n, d);
  for (double& v : m.values()) v = g(rng);
  return m;
}

double pair_dist(const EmbeddingMatrix& x, std::size_t i, std::size_t j) { return euclidean(x.row(i), x.row(j)); }

// Sum of squared residuals after projecting back onto k components.
double reconstruction_error(const EmbeddingMatrix& x, int k) {
  const EmbeddingMatrix p = pca(x, k);
  double total_var = 0, kept = 0;
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(i, j) / static_cast<double>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) total_var += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
    for (std::size_t c = 0; c < p.cols(); ++c) kept += p(i, c) * p(i, c);
  }
  return total_var - kept;
}

// Textbook trustworthiness with explicit rank tables.
double trust_oracle(const EmbeddingMatrix& hi, const EmbeddingMatrix& lo, int k) {
  const std::size_t n = hi.rows();
  double penalty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> by_hi, by_lo;
    for (std::size_t j = 0; j < n; ++j) if (j != i) { by_hi.push_back(j); by_lo.push_back(j); }
    auto order = [&](const EmbeddingMatrix& m, std::vector<std::size_t>& v) {
      std::stable_sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) { return pair_dist(m, i, a) < pair_dist(m, i, b); });
    };
    order(hi, by_hi);
    order(lo, by_lo);
    for (int t = 0; t < k; ++t) {
      const std::size_t j = by_lo[static_cast<std::size_t>(t)];
      const auto rank = static_cast<int>(std::find(by_hi.begin(), by_hi.end(), j) - by_hi.begin()) + 1;
      if (rank > k) penalty += rank - k;
    }
  }
  const double nn = static_cast<double>(n);
  return 1.0 - 2.0 / (nn * k * (2.0 * nn - 3.0 * k - 1.0)) * penalty;
}

}  // namespace

// ---- PCA

TEST(Pca, LineIn3dPreservesDistances) {
  EmbeddingMatrix x(6, 3);
  for (std::size_t i = 0; i < 6; ++i) {
    const double t = std::pow(1.7, static_cast<double>(i)) - 3.0;
    x(i, 0) = 1 + 2 * t;
    x(i, 1) = -1 + t;
    x(i, 2) = 0.5 - 3 * t;
  }
  const EmbeddingMatrix p = pca(x, 1);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(pair_dist(p, i, j), pair_dist(x, i, j), 1e-9);
}

TEST(Pca, FullRankIsARotation) {
  const EmbeddingMatrix x = random_matrix(20, 4, 3);
  const EmbeddingMatrix p = pca(x, 4);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 20; ++j) EXPECT_NEAR(pair_dist(p, i, j), pair_dist(x, i, j), 1e-9);
}

TEST(Pca, MatchesCovarianceEigenOracle) {
  const EmbeddingMatrix x = random_matrix(50, 10, 11);
  const EmbeddingMatrix p = pca(x, 3);
  const Eigen::MatrixXd o = oracle::pca(x, 3);
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(p(i, c), o(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)), 1e-8);
}

TEST(Pca, ColumnsUncorrelatedAndErrorMonotone) {
  const EmbeddingMatrix x = random_matrix(60, 8, 19);
  const EmbeddingMatrix p = pca(x, 5);
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = a + 1; b < 5; ++b) {
      double cov = 0;
      for (std::size_t i = 0; i < 60; ++i) cov += p(i, a) * p(i, b);
      EXPECT_LE(std::abs(cov / 59.0), 1e-8);
    }
  }
  double prev = INFINITY;
  for (int k = 1; k <= 8; ++k) {
    const double e = reconstruction_error(x, k);
    EXPECT_LE(e, prev + 1e-9);
    prev = e;
  }
  EXPECT_NEAR(prev, 0.0, 1e-8);
}

TEST(Pca, ZeroVarianceAndRange) {
  const EmbeddingMatrix x(5, 3, std::vector<double>(15, 2.0));
  const EmbeddingMatrix p = pca(x, 2);
  for (double v : p.values()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(pca(x, 0), InvalidArgument);
  EXPECT_THROW(pca(x, 4), InvalidArgument);
}

// ---- k-NN graph

TEST(Knn, CollinearPoints) {
  const EmbeddingMatrix x(3, 1, {0, 1, 3});
  const KnnGraph g = knn_graph(x, 1);
  EXPECT_EQ(g.indices, (std::vector<std::size_t>{1, 0, 1}));
  EXPECT_EQ(g.distances, (std::vector<double>{1, 1, 2}));
}

TEST(Knn, DuplicatesComeFirstByIndex) {
  const EmbeddingMatrix x(4, 2, {0, 0, 5, 5, 0, 0, 0, 0});
  const KnnGraph g = knn_graph(x, 2);
  EXPECT_EQ(g.neighbors(0)[0], 2u);
  EXPECT_EQ(g.neighbors(0)[1], 3u);
  EXPECT_EQ(g.dists(0)[0], 0.0);
}

TEST(Knn, FullNeighborhoodAndErrors) {
  const EmbeddingMatrix x = random_matrix(7, 3, 2);
  const KnnGraph g = knn_graph(x, 6);
  for (std::size_t i = 0; i < 7; ++i) {
    std::vector<std::size_t> nb(g.neighbors(i).begin(), g.neighbors(i).end());
    std::sort(nb.begin(), nb.end());
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < 7; ++j) if (j != i) others.push_back(j);
    EXPECT_EQ(nb, others);
  }
  EXPECT_THROW(knn_graph(x, 7), InvalidArgument);
}

// ---- smooth_knn

TEST(SmoothKnn, EqualDistancesClampToFloor) {
  const std::vector<double> d{1, 1};
  const SmoothKnn s = smooth_knn(d);
  EXPECT_EQ(s.rho, 1.0);
  EXPECT_NEAR(s.sigma, 1e-3, 1e-12);
}

TEST(SmoothKnn, AllZeroIsDegenerate) {
  const std::vector<double> d{0, 0, 0};
  const SmoothKnn s = smooth_knn(d);
  EXPECT_EQ(s.rho, 0.0);
  EXPECT_NEAR(s.sigma, 1e-3, 1e-12);
}

TEST(SmoothKnn, MatchesGridSearchOracle) {
  const std::vector<double> d{1, 2, 3};
  const SmoothKnn s = smooth_knn(d);
  EXPECT_EQ(s.rho, 1.0);
  auto f = [&](double sigma) {
    double sum = 0;
    for (double x : d) sum += std::exp(-std::max(0.0, x - 1.0) / sigma);
    return sum - std::log2(3.0);
  };
  EXPECT_LE(std::abs(f(s.sigma)), 1e-5);
  double best = 0, best_res = INFINITY;
  for (double sigma = 0.5; sigma < 3.0; sigma += 1e-5) {
    if (std::abs(f(sigma)) < best_res) {
      best_res = std::abs(f(sigma));
      best = sigma;
    }
  }
  EXPECT_NEAR(s.sigma, best, 1e-4);
  EXPECT_NEAR(s.sigma, 1.1331928143895704, 1e-4);  // root from a bracketing solver
}

TEST(SmoothKnn, ResidualOrClampOnRandomInputs) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(2 + trial % 20);
    for (double& v : d) v = u(rng);
    std::sort(d.begin(), d.end());
    const SmoothKnn s = smooth_knn(d);
    double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double sum = 0;
    for (double x : d) sum += std::exp(-std::max(0.0, x - s.rho) / s.sigma);
    const bool at_clamp = std::abs(s.sigma - 1e-3 * mean) < 1e-12 || std::abs(s.sigma - 1e3 * mean) < 1e-9;
    EXPECT_TRUE(std::abs(sum - std::log2(static_cast<double>(d.size()))) <= 1e-5 || at_clamp);
  }
}

// ---- fuzzy union and curve

TEST(FuzzyUnion, Examples) {
  EXPECT_DOUBLE_EQ(fuzzy_union(0.5, 0.5), 0.75);
  EXPECT_DOUBLE_EQ(fuzzy_union(1, 0), 1.0);
  EXPECT_NEAR(fuzzy_union(0.3, 0.4), 0.58, 1e-15);
}

TEST(FuzzyUnion, Properties) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng);
    const double r = fuzzy_union(a, b);
    EXPECT_EQ(r, fuzzy_union(b, a));
    EXPECT_GE(r, std::max(a, b) - 1e-15);
    EXPECT_LE(r, std::min(1.0, a + b) + 1e-15);
  }
}

TEST(Curve, MatchesReferenceLeastSquares) {
  // Values from an independent scipy curve_fit on the same 300-sample target.
  const CurveParams c1 = fit_curve(0.1);
  EXPECT_NEAR(c1.a, 1.5769434602697652, 1e-4);
  EXPECT_NEAR(c1.b, 0.8950608778515733, 1e-4);
  const CurveParams c5 = fit_curve(0.5);
  EXPECT_NEAR(c5.a, 0.5830300203414425, 1e-4);
  EXPECT_NEAR(c5.b, 1.3341669924314914, 1e-4);
  const CurveParams c0 = fit_curve(0.001);
  EXPECT_NEAR(c0.a, 1.929073395935085, 1e-4);
  EXPECT_NEAR(c0.b, 0.7915045334274393, 1e-4);
}

// ---- fuzzy set and UMAP

TEST(FuzzySet, NearestNeighborMembershipIsOne) {
  const auto blobs = testutil::make_blobs(30, 2, 5, 3.0, 1.0, 9);
  const KnnGraph g = knn_graph(blobs.x, 6);
  const FuzzyGraph f = fuzzy_simplicial_set(g);
  for (std::size_t i = 0; i < f.n; ++i) {
    const std::size_t nn = g.neighbors(i)[0];
    bool found = false;
    for (const auto& e : f.edges) {
      if (e.head == i && e.tail == nn) {
        EXPECT_DOUBLE_EQ(e.weight, 1.0);
        found = true;
      }
    }
    EXPECT_TRUE(found);
  }
  // Symmetric, weights in (0, 1].
  for (const auto& e : f.edges) {
    EXPECT_GT(e.weight, 0.0);
    EXPECT_LE(e.weight, 1.0);
    const auto twin = std::find_if(f.edges.begin(), f.edges.end(),
                                   [&](const WeightedEdge& o) { return o.head == e.tail && o.tail == e.head; });
    ASSERT_NE(twin, f.edges.end());
    EXPECT_EQ(twin->weight, e.weight);
  }
}

TEST(Umap, SeparatesDistantBlobs) {
  // Two 100-point blobs 20 sigma apart in 10-D.
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  EmbeddingMatrix x(200, 10);
  std::vector<int> truth(200);
  for (std::size_t i = 0; i < 200; ++i) {
    truth[i] = i < 100 ? 0 : 1;
    for (std::size_t j = 0; j < 10; ++j) x(i, j) = g(rng) + (j == 0 && truth[i] ? 20.0 : 0.0);
  }
  UmapParams p;
  p.n_neighbors = 15;
  const EmbeddingMatrix y = umap(x, p);
  ASSERT_EQ(y.rows(), 200u);
  ASSERT_EQ(y.cols(), 2u);
  EXPECT_TRUE(y.all_finite());

  // Linear separability along the centroid axis.
  double c[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < 200; ++i)
    for (int d = 0; d < 2; ++d) c[truth[i]][d] += y(i, d) / 100.0;
  const double ax = c[1][0] - c[0][0], ay = c[1][1] - c[0][1];
  double max0 = -INFINITY, min1 = INFINITY;
  for (std::size_t i = 0; i < 200; ++i) {
    const double proj = y(i, 0) * ax + y(i, 1) * ay;
    if (truth[i] == 0) max0 = std::max(max0, proj);
    else min1 = std::min(min1, proj);
  }
  EXPECT_LT(max0, min1);

  const KnnGraph low = knn_graph(y, 15);
  std::size_t same = 0;
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t nb : low.neighbors(i)) same += truth[nb] == truth[i];
  EXPECT_GE(static_cast<double>(same) / (200.0 * 15.0), 0.99);
}

TEST(Umap, SeededRunsAreBitIdentical) {
  const auto blobs = testutil::make_blobs(60, 3, 8, 5.0, 1.0, 3);
  UmapParams p;
  p.n_neighbors = 10;
  p.n_epochs = 100;
  const EmbeddingMatrix a = umap(blobs.x, p);
  const EmbeddingMatrix b = umap(blobs.x, p);
  EXPECT_EQ(a.values(), b.values());
  p.seed = 43;
  EXPECT_NE(umap(blobs.x, p).values(), a.values());
}

TEST(Umap, Preconditions) {
  const EmbeddingMatrix x = random_matrix(10, 4, 1);
  UmapParams p;
  p.n_neighbors = 10;
  EXPECT_THROW(umap(x, p), InvalidArgument);
  p.n_neighbors = 3;
  p.min_dist = 0;
  EXPECT_THROW(umap(x, p), InvalidArgument);
  p.min_dist = 0.1;
  p.out_dims = 4;
  EXPECT_THROW(umap(x, p), InvalidArgument);
}

TEST(Umap, ParallelModeRunsAndStaysFinite) {
  const auto blobs = testutil::make_blobs(50, 2, 6, 6.0, 1.0, 8);
  UmapParams p;
  p.n_neighbors = 8;
  p.n_epochs = 50;
  p.parallel = true;
  const EmbeddingMatrix y = umap(blobs.x, p);
  EXPECT_TRUE(y.all_finite());
}

TEST(Spectral, LayoutScaledToTenBox) {
  const auto blobs = testutil::make_blobs(40, 2, 5, 6.0, 1.0, 12);
  const FuzzyGraph f = fuzzy_simplicial_set(knn_graph(blobs.x, 8));
  const EmbeddingMatrix init = spectral_layout(f, 2, 42);
  for (std::size_t c = 0; c < 2; ++c) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < init.rows(); ++i) {
      lo = std::min(lo, init(i, c));
      hi = std::max(hi, init(i, c));
    }
    EXPECT_NEAR(lo, 0.0, 1e-9);
    EXPECT_NEAR(hi, 10.0, 1e-9);
  }
}

// ---- trustworthiness

TEST(Trustworthiness, IdentityIsOne) {
  const EmbeddingMatrix x = random_matrix(30, 5, 8);
  EXPECT_DOUBLE_EQ(trustworthiness(x, x, 5), 1.0);
}

TEST(Trustworthiness, ShuffledIsLowAndMatchesOracle) {
  const EmbeddingMatrix x = random_matrix(40, 5, 8);
  std::vector<std::size_t> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  const EmbeddingMatrix s = x.select_rows(perm);
  const double t = trustworthiness(x, s, 5);
  EXPECT_LT(t, 0.7);
  EXPECT_NEAR(t, trust_oracle(x, s, 5), 1e-12);
  const EmbeddingMatrix p2 = pca(x, 2);
  EXPECT_NEAR(trustworthiness(x, p2, 6), trust_oracle(x, p2, 6), 1e-12);
}

TEST(Trustworthiness, RankOneDataUnderPca) {
  EmbeddingMatrix x(12, 3);
  for (std::size_t i = 0; i < 12; ++i) {
    const double t = std::sqrt(static_cast<double>(i) + 0.3 * static_cast<double>(i * i));
    x(i, 0) = t;
    x(i, 1) = 2 * t;
    x(i, 2) = -t;
  }
  EXPECT_DOUBLE_EQ(trustworthiness(x, pca(x, 1), 3), 1.0);
  EXPECT_THROW(trustworthiness(x, x, 6), InvalidArgument);
}
