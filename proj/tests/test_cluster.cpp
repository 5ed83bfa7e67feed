#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <random>

#include "clustop/cluster.hpp"
#include "clustop/error.hpp"
#include "clustop/kernels.hpp"
#include "clustop/metrics.hpp"
#include "test_util.hpp"

using namespace clustop;

namespace {

// Three blobs 20 sigma apart plus uniform far-field noise.
testutil::Blobs blobs_with_noise(std::size_t per_blob, std::size_t noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-60, 60);
  const double centers[3][2] = {{0, 0}, {20, 0}, {10, 17.3}};
  testutil::Blobs b{EmbeddingMatrix(3 * per_blob + noise, 2), {}};
  for (std::size_t i = 0; i < 3 * per_blob; ++i) {
    const std::size_t c = i % 3;
    b.x(i, 0) = centers[c][0] + g(rng);
    b.x(i, 1) = centers[c][1] + g(rng);
    b.labels.push_back(static_cast<int>(c));
  }
  for (std::size_t i = 3 * per_blob; i < b.x.rows(); ++i) {
    // Keep noise points away from every blob.
    do {
      b.x(i, 0) = u(rng);
      b.x(i, 1) = u(rng);
    } while (std::any_of(std::begin(centers), std::end(centers), [&](const double* c) {
      return std::hypot(b.x(i, 0) - c[0], b.x(i, 1) - c[1]) < 12;
    }));
    b.labels.push_back(-1);
  }
  return b;
}

// Reference DBSCAN: flood fill from cores in index order, border points join
// their lowest-index core neighbor.
std::vector<int> dbscan_oracle(const EmbeddingMatrix& y, double eps, int min_samples) {
  const std::size_t n = y.rows();
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (euclidean(y.row(i), y.row(j)) <= eps) nb[i].push_back(j);
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = static_cast<int>(nb[i].size()) >= min_samples;
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (!core[s] || label[s] != -1) continue;
    std::queue<std::size_t> q;
    q.push(s);
    label[s] = next;
    while (!q.empty()) {
      const std::size_t i = q.front();
      q.pop();
      for (std::size_t j : nb[i]) {
        if (core[j] && label[j] == -1) {
          label[j] = next;
          q.push(j);
        }
      }
    }
    ++next;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (std::size_t j : nb[i]) {
      if (core[j]) {
        label[i] = label[j];
        break;
      }
    }
  }
  return label;
}

double best_antichain(const CondensedTree& t, std::size_t c) {
  // Exhaustive: every antichain under c is either {c} or a union of
  // antichains of its children (possibly empty).
  std::function<std::vector<double>(std::size_t)> all = [&](std::size_t node) {
    std::vector<double> totals{0.0};
    for (std::size_t child : t.children(node)) {
      std::vector<double> next;
      for (double a : totals)
        for (double b : all(child)) next.push_back(a + b);
      totals = std::move(next);
    }
    totals.push_back(t.stability[node - t.n_points]);
    return totals;
  };
  const auto options = all(c);
  return *std::max_element(options.begin(), options.end());
}

}  // namespace

// ---- k-means

TEST(Kmeans, SeparatedPairs) {
  const EmbeddingMatrix y(4, 2, {0, 0, 0, 1, 10, 0, 10, 1});
  const KMeansResult r = kmeans(y, 2, 42);
  EXPECT_EQ(r.assignment.labels, (std::vector<int>{0, 0, 1, 1}));
  EXPECT_NEAR(r.inertia, 1.0, 1e-12);
  EXPECT_NEAR(r.centroids(0, 1), 0.5, 1e-12);
  EXPECT_NEAR(r.centroids(1, 0), 10.0, 1e-12);
}

TEST(Kmeans, SingleClusterCentroidIsMean) {
  const EmbeddingMatrix y(3, 1, {1, 2, 6});
  const KMeansResult r = kmeans(y, 1, 1);
  EXPECT_EQ(r.assignment.labels, (std::vector<int>{0, 0, 0}));
  EXPECT_DOUBLE_EQ(r.centroids(0, 0), 3.0);
}

TEST(Kmeans, KEqualsNHasZeroInertia) {
  const EmbeddingMatrix y(5, 2, {0, 0, 1, 1, 2, 5, -3, 4, 9, 9});
  const KMeansResult r = kmeans(y, 5, 3);
  EXPECT_EQ(r.assignment.k, 5);
  EXPECT_EQ(r.inertia, 0.0);
  EXPECT_THROW(kmeans(y, 6, 3), InvalidArgument);
}

TEST(Kmeans, DeterministicAndPermutationInvariant) {
  const auto b = testutil::make_blobs(30, 4, 3, 10.0, 1.0, 2);
  const auto a1 = kmeans(b.x, 4, 9).assignment;
  EXPECT_EQ(a1.labels, kmeans(b.x, 4, 9).assignment.labels);
  EXPECT_DOUBLE_EQ(ari(a1.labels, b.labels), 1.0);
  std::vector<std::size_t> perm(b.x.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
  const auto a2 = kmeans(b.x.select_rows(perm), 4, 9).assignment;
  std::vector<int> back(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) back[perm[i]] = a2.labels[i];
  EXPECT_DOUBLE_EQ(ari(a1.labels, back), 1.0);
}

// ---- DBSCAN

TEST(Dbscan, BlobsAndOutlierMatchOracle) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  EmbeddingMatrix y(41, 2);
  for (std::size_t i = 0; i < 40; ++i) {
    y(i, 0) = g(rng) + (i % 2 ? 20.0 : 0.0);
    y(i, 1) = g(rng);
  }
  y(40, 0) = 100;
  y(40, 1) = 100;
  const ClusterAssignment a = dbscan(y, 1.5, 4);
  EXPECT_EQ(a.k, 2);
  EXPECT_EQ(a.labels[40], kNoise);
  const auto ref = dbscan_oracle(y, 1.5, 4);
  EXPECT_DOUBLE_EQ(ari(a.labels, ref), 1.0);
  for (std::size_t i = 0; i < 41; ++i) EXPECT_EQ(a.labels[i] == kNoise, ref[i] == -1);
}

TEST(Dbscan, RandomDataMatchesOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 20; ++trial) {
    EmbeddingMatrix y(60, 2);
    for (double& v : y.values()) v = u(rng);
    const double eps = 0.6 + 0.1 * trial;
    const ClusterAssignment a = dbscan(y, eps, 4);
    const auto ref = dbscan_oracle(y, eps, 4);
    // Same partition and noise set once both are numbered by first appearance.
    EXPECT_EQ(make_assignment(a.labels, "a", {}).labels, make_assignment(ref, "ref", {}).labels);
  }
}

TEST(Dbscan, DegenerateCases) {
  const EmbeddingMatrix spread(4, 1, {0, 10, 20, 30});
  const auto none = dbscan(spread, 1.0, 2);
  EXPECT_EQ(none.k, 0);
  EXPECT_EQ(none.noise_count(), 4u);
  const EmbeddingMatrix same(5, 2, std::vector<double>(10, 1.0));
  const auto one = dbscan(same, 0.1, 5);
  EXPECT_EQ(one.k, 1);
  EXPECT_EQ(one.noise_count(), 0u);
  EXPECT_THROW(dbscan(same, 0.0, 2), InvalidArgument);
}

TEST(Dbscan, NoiseNonIncreasingInEps) {
  const auto b = blobs_with_noise(20, 10, 4);
  std::size_t prev = b.x.rows() + 1;
  for (double eps = 0.2; eps < 8; eps += 0.2) {
    const std::size_t noise = dbscan(b.x, eps, 5).noise_count();
    EXPECT_LE(noise, prev);
    prev = noise;
  }
}

// ---- core distance and mutual reachability

TEST(CoreDistance, Examples) {
  const EmbeddingMatrix y(3, 1, {0, 1, 3});
  EXPECT_EQ(core_distances(y, 1), (std::vector<double>{1, 1, 2}));
  EXPECT_EQ(core_distance(y, 0, 2), 3.0);  // min_samples = n-1: farthest point
  const EmbeddingMatrix dup(3, 1, {5, 5, 9});
  EXPECT_EQ(core_distance(dup, 0, 1), 0.0);
  EXPECT_THROW(core_distance(y, 0, 3), InvalidArgument);
}

TEST(MutualReachability, MaxRuleAndSymmetry) {
  const std::vector<double> core{1.0, 2.0};
  const EmbeddingMatrix y(2, 1, {0, 0.5});
  EXPECT_EQ(mutual_reachability(y, core, 0, 1), 2.0);
  const std::vector<double> small{0.1, 0.1};
  const EmbeddingMatrix far(2, 1, {0, 5});
  EXPECT_EQ(mutual_reachability(far, small, 0, 1), 5.0);
  EXPECT_EQ(mutual_reachability(far, small, 1, 1), 0.0);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  EmbeddingMatrix r(20, 3);
  for (double& v : r.values()) v = g(rng);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 20; ++j) {
      std::vector<double> di, dj;
      for (std::size_t t = 0; t < 20; ++t) {
        if (t != i) di.push_back(euclidean(r.row(i), r.row(t)));
        if (t != j) dj.push_back(euclidean(r.row(j), r.row(t)));
      }
      std::sort(di.begin(), di.end());
      std::sort(dj.begin(), dj.end());
      const double expected = i == j ? 0.0 : std::max({di[3], dj[3], euclidean(r.row(i), r.row(j))});
      EXPECT_DOUBLE_EQ(mutual_reachability(r, i, j, 4), expected);
      EXPECT_EQ(mutual_reachability(r, i, j, 4), mutual_reachability(r, j, i, 4));
    }
  }
}

// ---- HDBSCAN

TEST(Hdbscan, ThreeBlobsAndNoise) {
  const auto b = blobs_with_noise(50, 10, 7);
  const HdbscanResult r = hdbscan(b.x, {10, 0});
  EXPECT_EQ(r.assignment.k, 3);
  std::size_t noise_hits = 0;
  for (std::size_t i = 150; i < 160; ++i) noise_hits += r.assignment.labels[i] == kNoise;
  EXPECT_GE(noise_hits, 8u);
  std::vector<int> blob_pred(r.assignment.labels.begin(), r.assignment.labels.begin() + 150);
  std::vector<int> blob_true(b.labels.begin(), b.labels.begin() + 150);
  EXPECT_GE(ari(blob_pred, blob_true), 0.95);
}

TEST(Hdbscan, SingleBlobIsOneCluster) {
  const auto b = testutil::make_blobs(60, 1, 2, 0.0, 1.0, 3);
  const HdbscanResult r = hdbscan(b.x, {10, 0});
  EXPECT_EQ(r.assignment.k, 1);
}

TEST(Hdbscan, Preconditions) {
  const auto b = testutil::make_blobs(5, 1, 2, 0.0, 1.0, 3);
  EXPECT_THROW(hdbscan(b.x, {6, 0}), InvalidArgument);
  EXPECT_THROW(hdbscan(b.x, {5, 0}), InvalidArgument);
  EXPECT_THROW(hdbscan(b.x, {3, 4}), InvalidArgument);
  EXPECT_THROW(hdbscan(b.x, {1, 0}), InvalidArgument);
}

TEST(Hdbscan, TreeInvariantsAndClusterSizes) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto b = testutil::make_blobs(25, 4, 2, 6.0, 1.0, seed);
    const HdbscanParams p{6, 3};
    const HdbscanResult r = hdbscan(b.x, p);
    const CondensedTree& t = r.tree;
    for (double s : t.stability) EXPECT_GE(s, 0.0);
    for (const auto& e : t.edges) {
      // A child leaves its parent no earlier than the parent was born.
      EXPECT_GE(e.lambda + 1e-12, t.birth_lambda[e.parent - t.n_points]);
      if (e.child >= t.n_points) EXPECT_GE(e.child_size, 6u);
    }
    std::vector<std::size_t> sizes(static_cast<std::size_t>(r.assignment.k), 0);
    for (int l : r.assignment.labels)
      if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
    for (std::size_t s : sizes) EXPECT_GE(s, 6u);
  }
}

TEST(Hdbscan, SelectionMaximizesStabilityExhaustively) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto b = testutil::make_blobs(8, 5, 2, 3.0, 1.0, seed);
    const HdbscanResult r = hdbscan(b.x, {3, 0});
    const CondensedTree& t = r.tree;
    double chosen = 0;
    for (std::size_t c : t.selected) chosen += t.stability[c - t.n_points];
    const auto root_children = t.children(t.root());
    double best = 0;
    if (root_children.empty()) {
      best = t.stability[0];
    } else {
      for (std::size_t c : root_children) best += best_antichain(t, c);
    }
    EXPECT_NEAR(chosen, best, 1e-9 * std::max(1.0, best)) << "seed " << seed;
    // Selected clusters form an antichain.
    for (std::size_t a : t.selected) {
      for (std::size_t c = a; c != t.root();) {
        c = t.parent[c - t.n_points];
        EXPECT_EQ(std::count(t.selected.begin(), t.selected.end(), c), 0);
      }
    }
  }
}

TEST(Hdbscan, PermutationInvariant) {
  const auto b = blobs_with_noise(30, 5, 13);
  const auto a1 = hdbscan(b.x, {8, 0}).assignment;
  std::vector<std::size_t> perm(b.x.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(1));
  const auto a2 = hdbscan(b.x.select_rows(perm), {8, 0}).assignment;
  std::vector<int> back(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) back[perm[i]] = a2.labels[i];
  EXPECT_DOUBLE_EQ(ari(a1.labels, back), 1.0);
}

// ---- assignments

TEST(Assignment, RenumberAndValidate) {
  const auto a = make_assignment({5, -1, 5, 2, -7}, "x", {});
  EXPECT_EQ(a.labels, (std::vector<int>{0, -1, 0, 1, -1}));
  EXPECT_EQ(a.k, 2);
  EXPECT_EQ(a.noise_count(), 2u);
  EXPECT_NO_THROW(a.validate());
  ClusterAssignment bad{{0, 2}, 3, "x", {}};
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Assignment, FileRoundTripWithSidecar) {
  testutil::TempDir dir;
  const Corpus c({Document::with_whitespace_words("a", "x"), Document::with_whitespace_words("b", "y"),
                  Document::with_whitespace_words("c", "z")});
  const auto a = make_assignment({0, -1, 0}, "hdbscan", {{"min_cluster_size", 5}});
  write_assignment(a, c, dir / "assign.jsonl");
  EXPECT_EQ(testutil::read_file(dir / "assign.jsonl"),
            "{\"id\":\"a\",\"label\":0}\n{\"id\":\"b\",\"label\":-1}\n{\"id\":\"c\",\"label\":0}\n");
  const auto meta = nlohmann::json::parse(testutil::read_file(dir / "assign.meta.json"));
  EXPECT_EQ(meta["k"], 1);
  EXPECT_EQ(meta["noise"], 1);
  EXPECT_EQ(meta["algorithm"], "hdbscan");
  std::vector<std::string> ids;
  const auto back = read_assignment(dir / "assign.jsonl", &ids);
  EXPECT_EQ(back.labels, a.labels);
  EXPECT_EQ(back.algorithm, "hdbscan");
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Assignment, AlignLabelsByIdAndMismatch) {
  const LabeledIds file{{"b", "a"}, {7, 3}};
  EXPECT_EQ(align_labels(file, {"a", "b"}), (std::vector<int>{3, 7}));
  EXPECT_THROW(align_labels(file, {"a", "c"}), Error);
  EXPECT_THROW(align_labels(file, {"a"}), Error);
}
