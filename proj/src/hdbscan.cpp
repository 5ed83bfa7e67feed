#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <tuple>

#include "clustop/cluster.hpp"
#include "clustop/error.hpp"
#include "clustop/kernels.hpp"

namespace clustop {

std::vector<std::size_t> CondensedTree::children(std::size_t cluster) const {
  std::vector<std::size_t> out;
  for (const auto& e : edges) {
    if (e.parent == cluster && e.child >= n_points) out.push_back(e.child);
  }
  return out;
}

double core_distance(const EmbeddingMatrix& y, std::size_t i, int min_samples) {
  const std::size_t n = y.rows();
  if (i >= n) throw InvalidArgument("core_distance: index out of range");
  if (min_samples < 1 || static_cast<std::size_t>(min_samples) >= n) {
    throw InvalidArgument("core_distance: min_samples must be in [1, n)");
  }
  std::vector<double> d;
  d.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) d.push_back(euclidean(y.row(i), y.row(j)));
  }
  auto nth = d.begin() + (min_samples - 1);
  std::nth_element(d.begin(), nth, d.end());
  return *nth;
}

std::vector<double> core_distances(const EmbeddingMatrix& y, int min_samples) {
  if (min_samples < 1 || static_cast<std::size_t>(min_samples) >= y.rows()) {
    throw InvalidArgument("core_distances: min_samples must be in [1, n)");
  }
  const KnnGraph g = kernels::omp::knn(y, static_cast<std::size_t>(min_samples), Metric::Euclidean);
  std::vector<double> core(y.rows());
  for (std::size_t i = 0; i < y.rows(); ++i) core[i] = g.dists(i).back();
  return core;
}

double mutual_reachability(const EmbeddingMatrix& y, std::span<const double> core, std::size_t i,
                           std::size_t j) {
  if (i == j) return 0.0;
  return std::max({core[i], core[j], euclidean(y.row(i), y.row(j))});
}

double mutual_reachability(const EmbeddingMatrix& y, std::size_t i, std::size_t j, int min_samples) {
  if (i >= y.rows() || j >= y.rows()) throw InvalidArgument("mutual_reachability: index out of range");
  if (i == j) return 0.0;
  const double ci = core_distance(y, i, min_samples);
  const double cj = core_distance(y, j, min_samples);
  return std::max({ci, cj, euclidean(y.row(i), y.row(j))});
}

namespace {

struct MstEdge {
  std::size_t u = 0;  // u < v
  std::size_t v = 0;
  double weight = 0.0;

  auto key() const { return std::tie(weight, u, v); }
};

std::vector<MstEdge> prim_mst(const EmbeddingMatrix& y, const std::vector<double>& core) {
  const std::size_t n = y.rows();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, inf);
  std::vector<std::size_t> from(n, 0);
  std::vector<double> dist(n);
  std::vector<MstEdge> edges;
  edges.reserve(n - 1);

  auto edge_key = [](double w, std::size_t a, std::size_t b) {
    return std::make_tuple(w, std::min(a, b), std::max(a, b));
  };

  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t step = 1; step < n; ++step) {
    kernels::omp::distances_from(y, current, dist, Metric::Euclidean);
    for (std::size_t w = 0; w < n; ++w) {
      if (in_tree[w]) continue;
      const double mr = std::max({core[current], core[w], dist[w]});
      if (edge_key(mr, current, w) < edge_key(best[w], from[w], w)) {
        best[w] = mr;
        from[w] = current;
      }
    }
    std::size_t next = n;
    for (std::size_t w = 0; w < n; ++w) {
      if (in_tree[w]) continue;
      if (next == n || edge_key(best[w], from[w], w) < edge_key(best[next], from[next], next)) next = w;
    }
    in_tree[next] = true;
    edges.push_back({std::min(next, from[next]), std::max(next, from[next]), best[next]});
    current = next;
  }
  return edges;
}

struct Dendrogram {
  // Internal node i (id n + i) merges left/right at `distance`.
  std::vector<std::size_t> left, right, size;
  std::vector<double> distance;
};

Dendrogram single_linkage(std::vector<MstEdge> edges, std::size_t n) {
  std::sort(edges.begin(), edges.end(),
            [](const MstEdge& a, const MstEdge& b) { return a.key() < b.key(); });
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  Dendrogram d;
  std::vector<std::size_t> sizes(2 * n - 1, 1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::size_t a = find(edges[e].u);
    const std::size_t b = find(edges[e].v);
    const std::size_t node = n + e;
    parent[a] = node;
    parent[b] = node;
    sizes[node] = sizes[a] + sizes[b];
    d.left.push_back(a);
    d.right.push_back(b);
    d.size.push_back(sizes[node]);
    d.distance.push_back(edges[e].weight);
  }
  return d;
}

CondensedTree condense(const Dendrogram& dendro, std::size_t n, std::size_t min_cluster_size) {
  CondensedTree tree;
  tree.n_points = n;
  if (n == 1) return tree;

  double min_positive = std::numeric_limits<double>::infinity();
  for (double w : dendro.distance) {
    if (w > 0.0) min_positive = std::min(min_positive, w);
  }
  // Zero-distance merges get a finite lambda above every finite one.
  const double lambda_cap = std::isfinite(min_positive) ? 2.0 / min_positive : 1.0;
  auto lambda_of = [&](double w) { return w > 0.0 ? 1.0 / w : lambda_cap; };
  auto size_of = [&](std::size_t node) { return node < n ? std::size_t{1} : dendro.size[node - n]; };

  auto emit_points = [&](std::size_t node, std::size_t cluster, double lambda) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        tree.edges.push_back({cluster, x, lambda, 1});
      } else {
        stack.push_back(dendro.right[x - n]);
        stack.push_back(dendro.left[x - n]);
      }
    }
  };

  const std::size_t root_node = 2 * n - 2;
  std::size_t next_label = n + 1;
  tree.birth_lambda.push_back(0.0);
  tree.parent.push_back(n);

  std::deque<std::pair<std::size_t, std::size_t>> queue{{root_node, n}};  // (node, cluster)
  while (!queue.empty()) {
    const auto [node, cluster] = queue.front();
    queue.pop_front();
    if (node < n) continue;
    const std::size_t l = dendro.left[node - n];
    const std::size_t r = dendro.right[node - n];
    const double lambda = lambda_of(dendro.distance[node - n]);
    const bool l_big = size_of(l) >= min_cluster_size;
    const bool r_big = size_of(r) >= min_cluster_size;
    if (l_big && r_big) {
      for (std::size_t child : {l, r}) {
        const std::size_t label = next_label++;
        tree.edges.push_back({cluster, label, lambda, size_of(child)});
        tree.birth_lambda.push_back(lambda);
        tree.parent.push_back(cluster);
        queue.emplace_back(child, label);
      }
    } else if (!l_big && !r_big) {
      emit_points(l, cluster, lambda);
      emit_points(r, cluster, lambda);
    } else if (!l_big) {
      emit_points(l, cluster, lambda);
      queue.emplace_back(r, cluster);
    } else {
      emit_points(r, cluster, lambda);
      queue.emplace_back(l, cluster);
    }
  }

  tree.stability.assign(next_label - n, 0.0);
  for (const auto& e : tree.edges) {
    const std::size_t c = e.parent - n;
    tree.stability[c] += (e.lambda - tree.birth_lambda[c]) * static_cast<double>(e.child_size);
  }
  return tree;
}

void select_eom(CondensedTree& tree) {
  const std::size_t m = tree.cluster_count();
  const std::size_t n = tree.n_points;
  std::vector<std::vector<std::size_t>> kids(m);
  for (std::size_t c = 1; c < m; ++c) kids[tree.parent[c] - n].push_back(c);

  std::vector<double> best(m);
  std::vector<bool> take_self(m, true);
  // Children always carry larger ids than their parent.
  for (std::size_t c = m; c-- > 0;) {
    if (kids[c].empty()) {
      best[c] = tree.stability[c];
      continue;
    }
    double sub = 0.0;
    for (std::size_t k : kids[c]) sub += best[k];
    if (sub > tree.stability[c]) {
      best[c] = sub;
      take_self[c] = false;
    } else {
      best[c] = tree.stability[c];
    }
  }

  tree.selected.clear();
  std::vector<std::size_t> stack;
  if (kids[0].empty()) {
    tree.selected.push_back(n);
  } else {
    stack.assign(kids[0].rbegin(), kids[0].rend());
  }
  while (!stack.empty()) {
    const std::size_t c = stack.back();
    stack.pop_back();
    if (take_self[c]) {
      tree.selected.push_back(c + n);
    } else {
      for (auto it = kids[c].rbegin(); it != kids[c].rend(); ++it) stack.push_back(*it);
    }
  }
  std::sort(tree.selected.begin(), tree.selected.end());
}

}  // namespace

HdbscanResult hdbscan(const EmbeddingMatrix& y, const HdbscanParams& p) {
  const std::size_t n = y.rows();
  if (p.min_cluster_size < 2) throw InvalidArgument("hdbscan: min_cluster_size must be at least 2");
  if (p.min_samples < 0) throw InvalidArgument("hdbscan: min_samples must be positive");
  const int min_samples = p.effective_min_samples();
  if (min_samples > p.min_cluster_size) {
    throw InvalidArgument("hdbscan: min_samples must not exceed min_cluster_size");
  }
  if (n <= static_cast<std::size_t>(p.min_cluster_size)) {
    throw InvalidArgument("hdbscan: need more points than min_cluster_size (n=" + std::to_string(n) +
                          ", min_cluster_size=" + std::to_string(p.min_cluster_size) + ")");
  }
  if (!y.all_finite()) throw InvalidArgument("hdbscan: input has non-finite values");

  const std::vector<double> core = core_distances(y, min_samples);
  const Dendrogram dendro = single_linkage(prim_mst(y, core), n);
  CondensedTree tree = condense(dendro, n, static_cast<std::size_t>(p.min_cluster_size));
  select_eom(tree);

  const std::size_t m = tree.cluster_count();
  std::vector<int> cluster_label(m, kNoise);
  for (std::size_t i = 0; i < tree.selected.size(); ++i) {
    cluster_label[tree.selected[i] - n] = static_cast<int>(i);
  }
  // Parents precede children, so one forward pass propagates selections down.
  for (std::size_t c = 1; c < m; ++c) {
    if (cluster_label[c] == kNoise) cluster_label[c] = cluster_label[tree.parent[c] - n];
  }
  std::vector<int> labels(n, kNoise);
  for (const auto& e : tree.edges) {
    if (e.child < n) labels[e.child] = cluster_label[e.parent - n];
  }

  ClusterAssignment a{std::move(labels), static_cast<int>(tree.selected.size()), "hdbscan",
                      {{"min_cluster_size", p.min_cluster_size}, {"min_samples", min_samples}}};
  return {std::move(a), std::move(tree)};
}

}  // namespace clustop
