#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <spdlog/spdlog.h>
#include <utility>

#include "clustop/dimred.hpp"
#include "clustop/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace clustop {

namespace {

constexpr double kSmoothTolerance = 1e-5;
constexpr int kSmoothMaxIter = 200;
constexpr std::size_t kDenseSpectralLimit = 4000;

double clip4(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace

KnnGraph knn_graph(const EmbeddingMatrix& x, int k, Metric metric) {
  if (k < 1) throw InvalidArgument("knn_graph: k must be positive");
  if (static_cast<std::size_t>(k) >= x.rows()) {
    throw InvalidArgument("knn_graph: k must be smaller than the number of rows");
  }
  return kernels::omp::knn(x, static_cast<std::size_t>(k), metric);
}

SmoothKnn smooth_knn(std::span<const double> distances) {
  if (distances.size() < 2) throw InvalidArgument("smooth_knn: need at least two distances");
  double mean = 0.0;
  double rho = 0.0;
  for (double d : distances) {
    if (d < 0.0 || !std::isfinite(d)) throw InvalidArgument("smooth_knn: invalid distance");
    mean += d;
    if (rho == 0.0 && d > 0.0) rho = d;
  }
  mean /= static_cast<double>(distances.size());
  if (!std::is_sorted(distances.begin(), distances.end())) {
    throw InvalidArgument("smooth_knn: distances must be sorted");
  }

  const double target = std::log2(static_cast<double>(distances.size()));
  const double scale = mean > 0.0 ? mean : 1.0;
  const double lo_bound = 1e-3 * scale;
  const double hi_bound = 1e3 * scale;
  auto residual = [&](double sigma) {
    double s = 0.0;
    for (double d : distances) s += std::exp(-std::max(0.0, d - rho) / sigma);
    return s - target;
  };

  // residual is non-decreasing in sigma.
  if (residual(lo_bound) >= 0.0) return {rho, lo_bound};
  if (residual(hi_bound) <= 0.0) return {rho, hi_bound};
  double lo = lo_bound;
  double hi = hi_bound;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < kSmoothMaxIter; ++it) {
    mid = 0.5 * (lo + hi);
    const double r = residual(mid);
    if (std::abs(r) <= kSmoothTolerance) break;
    (r > 0.0 ? hi : lo) = mid;
  }
  return {rho, mid};
}

double fuzzy_union(double a, double b) { return a + b - a * b; }

CurveParams fit_curve(double min_dist, double spread) {
  if (!(min_dist > 0.0) || !(spread > 0.0)) {
    throw InvalidArgument("fit_curve: min_dist and spread must be positive");
  }
  static std::mutex mutex;
  static std::map<std::pair<double, double>, CurveParams> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find({min_dist, spread}); it != cache.end()) return it->second;
  }

  constexpr int kSamples = 300;
  std::vector<double> xs(kSamples), ys(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    xs[i] = 3.0 * spread * i / (kSamples - 1);
    ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
  }
  auto sse = [&](double a, double b) {
    double s = 0.0;
    for (int i = 0; i < kSamples; ++i) {
      const double r = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b)) - ys[i];
      s += r * r;
    }
    return s;
  };

  // Levenberg-Marquardt from (1, 1).
  double a = 1.0, b = 1.0, lambda = 1e-3;
  double cost = sse(a, b);
  for (int it = 0; it < 500; ++it) {
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (int i = 0; i < kSamples; ++i) {
      const double x = xs[i];
      const double u = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
      const double f = 1.0 / (1.0 + a * u);
      const double r = f - ys[i];
      const Eigen::Vector2d g(-u * f * f, x > 0.0 ? -a * u * 2.0 * std::log(x) * f * f : 0.0);
      jtj += g * g.transpose();
      jtr += g * r;
    }
    bool improved = false;
    while (lambda < 1e12) {
      Eigen::Matrix2d damped = jtj;
      damped.diagonal() *= (1.0 + lambda);
      const Eigen::Vector2d step = damped.ldlt().solve(-jtr);
      const double na = a + step[0], nb = b + step[1];
      const double ncost = sse(na, nb);
      if (std::isfinite(ncost) && ncost < cost) {
        const double rel = (cost - ncost) / std::max(cost, 1e-300);
        a = na;
        b = nb;
        cost = ncost;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = rel > 1e-15;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }

  const CurveParams params{a, b};
  std::lock_guard lock(mutex);
  cache.emplace(std::make_pair(min_dist, spread), params);
  return params;
}

FuzzyGraph fuzzy_simplicial_set(const KnnGraph& knn) {
  std::map<std::pair<std::size_t, std::size_t>, double> directed;
  for (std::size_t i = 0; i < knn.n; ++i) {
    const auto dists = knn.dists(i);
    const auto nbrs = knn.neighbors(i);
    const SmoothKnn sk = smooth_knn(dists);
    for (std::size_t r = 0; r < knn.k; ++r) {
      const double excess = dists[r] - sk.rho;
      const double w = excess <= 0.0 ? 1.0 : std::exp(-excess / sk.sigma);
      directed[{i, nbrs[r]}] = w;
    }
  }

  FuzzyGraph graph{knn.n, {}};
  graph.edges.reserve(directed.size() * 2);
  for (const auto& [key, w] : directed) {
    const auto [i, j] = key;
    auto rev = directed.find({j, i});
    if (rev != directed.end() && j < i) continue;  // emitted from the (j, i) side
    const double combined = fuzzy_union(w, rev == directed.end() ? 0.0 : rev->second);
    if (combined <= 0.0) continue;
    graph.edges.push_back({i, j, combined});
    graph.edges.push_back({j, i, combined});
  }
  std::sort(graph.edges.begin(), graph.edges.end(), [](const WeightedEdge& l, const WeightedEdge& r) {
    return std::tie(l.head, l.tail) < std::tie(r.head, r.tail);
  });
  return graph;
}

namespace {

bool dense_spectral(const FuzzyGraph& graph, int dims, Eigen::MatrixXd& coords) {
  const auto n = static_cast<Eigen::Index>(graph.n);
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (const auto& e : graph.edges) degree[e.head] += e.weight;
  if ((degree.array() <= 0.0).any()) return false;
  const Eigen::VectorXd inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n);
  for (const auto& e : graph.edges) {
    lap(e.head, e.tail) -= e.weight * inv_sqrt[e.head] * inv_sqrt[e.tail];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success) return false;
  coords = solver.eigenvectors().middleCols(1, dims);
  return coords.allFinite();
}

// Subspace iteration on the shifted normalized adjacency (I + D^-1/2 W D^-1/2)
// for graphs too large for a dense solve.
bool iterative_spectral(const FuzzyGraph& graph, int dims, std::uint64_t seed,
                        Eigen::MatrixXd& coords) {
  const auto n = static_cast<Eigen::Index>(graph.n);
  const int block = dims + 1;
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (const auto& e : graph.edges) degree[e.head] += e.weight;
  if ((degree.array() <= 0.0).any()) return false;
  const Eigen::VectorXd inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  auto apply = [&](const Eigen::MatrixXd& q) {
    Eigen::MatrixXd out = q;
    for (const auto& e : graph.edges) {
      out.row(e.head) += e.weight * inv_sqrt[e.head] * inv_sqrt[e.tail] * q.row(e.tail);
    }
    return out;
  };

  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd q(n, block);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < block; ++c) q(i, c) = normal(rng);
  }
  q = Eigen::HouseholderQR<Eigen::MatrixXd>(q).householderQ() * Eigen::MatrixXd::Identity(n, block);
  for (int it = 0; it < 1000; ++it) {
    const Eigen::MatrixXd mq = apply(q);
    const Eigen::MatrixXd h = q.transpose() * mq;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(h);
    const Eigen::MatrixXd ritz = q * small.eigenvectors();
    const Eigen::MatrixXd residual = apply(ritz) - ritz * small.eigenvalues().asDiagonal();
    if (residual.colwise().norm().maxCoeff() < 1e-6) {
      // Eigenvalues ascending; the largest is the trivial vector.
      coords = ritz.leftCols(dims).rowwise().reverse();
      return coords.allFinite();
    }
    q = Eigen::HouseholderQR<Eigen::MatrixXd>(mq).householderQ() *
        Eigen::MatrixXd::Identity(n, block);
  }
  return false;
}

}  // namespace

EmbeddingMatrix spectral_layout(const FuzzyGraph& graph, int dims, std::uint64_t seed) {
  const std::size_t n = graph.n;
  Eigen::MatrixXd coords;
  bool ok = false;
  if (static_cast<std::size_t>(dims) + 1 < n) {
    ok = n <= kDenseSpectralLimit ? dense_spectral(graph, dims, coords)
                                  : iterative_spectral(graph, dims, seed, coords);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  if (!ok) {
    spdlog::warn("spectral initialization failed; using seeded random layout");
    coords.resize(static_cast<Eigen::Index>(n), dims);
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
      for (int c = 0; c < dims; ++c) coords(i, c) = 1e-2 * normal(rng);
    }
  } else {
    const double expansion = 10.0 / std::max(coords.cwiseAbs().maxCoeff(), 1e-300);
    coords *= expansion;
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
      for (int c = 0; c < dims; ++c) coords(i, c) += 1e-4 * normal(rng);
    }
  }

  EmbeddingMatrix out(n, static_cast<std::size_t>(dims));
  for (int c = 0; c < dims; ++c) {
    const double lo = coords.col(c).minCoeff();
    const double range = coords.col(c).maxCoeff() - lo;
    for (std::size_t i = 0; i < n; ++i) {
      out(i, c) = range > 0.0 ? 10.0 * (coords(static_cast<Eigen::Index>(i), c) - lo) / range : 5.0;
    }
  }
  return out;
}

namespace {

struct EdgeSchedule {
  std::vector<std::size_t> head, tail;
  std::vector<double> epochs_per_sample;
  std::vector<double> next_sample;
  std::vector<double> epochs_per_negative;
  std::vector<double> next_negative;
};

EdgeSchedule make_schedule(const FuzzyGraph& graph, int n_epochs, int negative_rate) {
  double max_w = 0.0;
  for (const auto& e : graph.edges) max_w = std::max(max_w, e.weight);
  EdgeSchedule s;
  for (const auto& e : graph.edges) {
    if (e.weight < max_w / n_epochs) continue;
    const double eps = max_w / e.weight;
    s.head.push_back(e.head);
    s.tail.push_back(e.tail);
    s.epochs_per_sample.push_back(eps);
    s.next_sample.push_back(eps);
    const double neg = negative_rate > 0 ? eps / negative_rate : 0.0;
    s.epochs_per_negative.push_back(neg);
    s.next_negative.push_back(neg);
  }
  return s;
}

// One scheduled edge update: attraction between head and tail, then
// repulsion of head from negative samples.
template <typename Load, typename Store, typename Rng>
void process_edge(EdgeSchedule& s, std::size_t e, int epoch, double alpha, const CurveParams& ab,
                  int dims, std::size_t n, int negative_rate, std::vector<double>& y, Load load,
                  Store store, Rng& rng) {
  const double a = ab.a, b = ab.b;
  const std::size_t j = s.head[e];
  const std::size_t k = s.tail[e];
  double* cur = y.data() + j * dims;
  double* oth = y.data() + k * dims;

  double dist_sq = 0.0;
  for (int d = 0; d < dims; ++d) {
    const double diff = load(cur[d]) - load(oth[d]);
    dist_sq += diff * diff;
  }
  double coeff = 0.0;
  if (dist_sq > 0.0) {
    coeff = -2.0 * a * b * std::pow(dist_sq, b - 1.0) / (a * std::pow(dist_sq, b) + 1.0);
  }
  for (int d = 0; d < dims; ++d) {
    const double g = clip4(coeff * (load(cur[d]) - load(oth[d]))) * alpha;
    store(cur[d], load(cur[d]) + g);
    store(oth[d], load(oth[d]) - g);
  }
  s.next_sample[e] += s.epochs_per_sample[e];

  if (negative_rate <= 0) return;
  const auto n_neg = static_cast<long>((epoch - s.next_negative[e]) / s.epochs_per_negative[e]);
  for (long p = 0; p < n_neg; ++p) {
    const std::size_t other = static_cast<std::size_t>(rng() % n);
    double* neg = y.data() + other * dims;
    double dsq = 0.0;
    for (int d = 0; d < dims; ++d) {
      const double diff = load(cur[d]) - load(neg[d]);
      dsq += diff * diff;
    }
    double rep = 0.0;
    if (dsq > 0.0) {
      rep = 2.0 * b / ((0.001 + dsq) * (a * std::pow(dsq, b) + 1.0));
    } else if (other == j) {
      continue;
    }
    if (rep <= 0.0) continue;
    for (int d = 0; d < dims; ++d) {
      const double g = clip4(rep * (load(cur[d]) - load(neg[d]))) * alpha;
      store(cur[d], load(cur[d]) + g);
    }
  }
  s.next_negative[e] += static_cast<double>(n_neg) * s.epochs_per_negative[e];
}

}  // namespace

EmbeddingMatrix umap(const EmbeddingMatrix& x, const UmapParams& p) {
  const std::size_t n = x.rows();
  if (p.n_neighbors < 2) throw InvalidArgument("umap: n_neighbors must be at least 2");
  if (static_cast<std::size_t>(p.n_neighbors) >= n) {
    throw InvalidArgument("umap: n_neighbors must be smaller than the number of rows");
  }
  if (!(p.min_dist > 0.0 && p.min_dist <= 1.0)) throw InvalidArgument("umap: min_dist must be in (0,1]");
  if (p.out_dims < 1 || static_cast<std::size_t>(p.out_dims) >= x.cols()) {
    throw InvalidArgument("umap: out_dims must be in [1, d)");
  }
  if (p.n_epochs < 0 || p.negative_sample_rate < 0) throw InvalidArgument("umap: negative epochs or rate");
  if (!x.all_finite()) throw InvalidArgument("umap: input has non-finite values");

  const int n_epochs = p.n_epochs > 0 ? p.n_epochs : (n <= 10000 ? 500 : 200);
  const int dims = p.out_dims;
  const CurveParams ab = fit_curve(p.min_dist);

  const KnnGraph knn = knn_graph(x, p.n_neighbors, p.metric);
  const FuzzyGraph graph = fuzzy_simplicial_set(knn);
  EmbeddingMatrix layout = spectral_layout(graph, dims, p.seed);
  layout.set_stage(x.stage());
  if (!layout.all_finite()) throw Error("umap: non-finite initial layout");

  EdgeSchedule sched = make_schedule(graph, n_epochs, p.negative_sample_rate);
  std::vector<double>& y = layout.values();
  const auto n_edges = static_cast<std::ptrdiff_t>(sched.head.size());

  if (!p.parallel) {
    std::mt19937_64 rng(p.seed);
    auto load = [](const double& v) { return v; };
    auto store = [](double& v, double value) { v = value; };
    for (int epoch = 0; epoch < n_epochs; ++epoch) {
      const double alpha = 1.0 - static_cast<double>(epoch) / n_epochs;
      for (std::ptrdiff_t e = 0; e < n_edges; ++e) {
        if (sched.next_sample[e] <= epoch) {
          process_edge(sched, e, epoch, alpha, ab, dims, n, p.negative_sample_rate, y, load, store,
                       rng);
        }
      }
    }
  } else {
    // Lock-free updates in the style of Hogwild; concurrent writes may be lost.
    auto load = [](const double& v) {
      return std::atomic_ref<double>(const_cast<double&>(v)).load(std::memory_order_relaxed);
    };
    auto store = [](double& v, double value) {
      std::atomic_ref<double>(v).store(value, std::memory_order_relaxed);
    };
    for (int epoch = 0; epoch < n_epochs; ++epoch) {
      const double alpha = 1.0 - static_cast<double>(epoch) / n_epochs;
#pragma omp parallel
      {
        int tid = 0;
#ifdef _OPENMP
        tid = omp_get_thread_num();
#endif
        std::mt19937_64 rng(p.seed + 7919ULL * static_cast<std::uint64_t>(epoch + 1) +
                            static_cast<std::uint64_t>(tid));
#pragma omp for schedule(static)
        for (std::ptrdiff_t e = 0; e < n_edges; ++e) {
          if (sched.next_sample[e] <= epoch) {
            process_edge(sched, e, epoch, alpha, ab, dims, n, p.negative_sample_rate, y, load,
                         store, rng);
          }
        }
      }
    }
  }

  if (!layout.all_finite()) throw Error("umap: optimization produced non-finite coordinates");
  return layout;
}

}  // namespace clustop
