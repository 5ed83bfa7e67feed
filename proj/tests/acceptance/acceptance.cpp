// Acceptance suite. One PASS/FAIL line per criterion; exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "clustop/cluster.hpp"
#include "clustop/dimred.hpp"
#include "clustop/enhance.hpp"
#include "clustop/fixture.hpp"
#include "clustop/metrics.hpp"
#include "clustop/pipeline.hpp"
#include "clustop/topics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace clustop;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string format_num(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n, int k, bool with_noise) {
  std::vector<int> l(n);
  for (int& v : l) v = static_cast<int>(rng() % static_cast<unsigned>(k)) - (with_noise ? 1 : 0);
  return l;
}

// ---- 1. metric oracles

Outcome metric_oracles() {
  std::mt19937_64 rng(2024);
  double worst_ext = 0, worst_int = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 49;
    const auto a = random_labels(rng, n, 1 + static_cast<int>(rng() % 7), t % 4 == 0);
    const auto b = random_labels(rng, n, 1 + static_cast<int>(rng() % 7), false);
    const PairScores p = pair_scores(a, b);
    const oracle::Pairs o = oracle::pair_scores(a, b);
    for (double d : {ari(a, b) - oracle::ari(a, b), nmi(a, b) - oracle::nmi(a, b), ami(a, b) - oracle::ami(a, b),
                     purity(a, b) - oracle::purity(a, b), p.precision - o.precision, p.recall - o.recall,
                     p.accuracy - o.accuracy, p.f1 - o.f1}) {
      worst_ext = std::max(worst_ext, std::abs(d));
    }
  }
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 10 + rng() % 60;
    EmbeddingMatrix y(n, 2);
    const int k = 2 + static_cast<int>(rng() % 4);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      l[i] = i < static_cast<std::size_t>(k) ? static_cast<int>(i) : static_cast<int>(rng() % k);
      y(i, 0) = g(rng) + 3.0 * l[i];
      y(i, 1) = g(rng);
    }
    if (t % 5 == 0) l[n - 1] = -1;
    const double ch = oracle::calinski_harabasz(y, l);
    worst_int = std::max({worst_int, std::abs(silhouette(y, l) - oracle::silhouette(y, l)),
                          std::abs(calinski_harabasz(y, l) - ch) / std::max(1.0, ch),
                          std::abs(davies_bouldin(y, l) - oracle::davies_bouldin(y, l))});
  }
  return {worst_ext <= 1e-10 && worst_int <= 1e-9,
          "max |d| external " + format_num("%.2e", worst_ext) + ", internal " + format_num("%.2e", worst_int)};
}

// ---- 2. HDBSCAN recovery

Outcome hdbscan_recovery() {
  double min_ari = 1.0, min_noise = 1.0, pooled = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const double centers[3][2] = {{0, 0}, {10, 0}, {5, 8.66}};
    EmbeddingMatrix y(160, 2);
    std::vector<int> truth;
    for (std::size_t i = 0; i < 150; ++i) {
      const std::size_t c = i % 3;
      y(i, 0) = centers[c][0] + g(rng);
      y(i, 1) = centers[c][1] + g(rng);
      truth.push_back(static_cast<int>(c));
    }
    // Uniform over the blobs' bounding box padded by 30 on every side. Noise
    // landing within the blob split distance joins a blob, as in any HDBSCAN.
    std::uniform_real_distribution<double> ux(-30, 40), uy(-30, 38.66);
    for (std::size_t i = 150; i < 160; ++i) {
      y(i, 0) = ux(rng);
      y(i, 1) = uy(rng);
    }
    const auto labels = hdbscan(y, {10, 0}).assignment.labels;
    const std::vector<int> blob_labels(labels.begin(), labels.begin() + 150);
    min_ari = std::min(min_ari, ari(blob_labels, truth));
    const double noise_frac = std::count(labels.begin() + 150, labels.end(), kNoise) / 10.0;
    min_noise = std::min(min_noise, noise_frac);
    pooled += noise_frac / 20.0;
  }
  return {min_ari >= 0.95 && min_noise >= 0.8,
          "worst of 20 seeds: ARI " + format_num("%.4f", min_ari) + ", noise labeled " +
              format_num("%.0f%%", 100 * min_noise) + " (pooled " + format_num("%.0f%%", 100 * pooled) + ")"};
}

// ---- 3. UMAP quality

Outcome umap_quality() {
  const auto blobs = testutil::make_blobs(200, 5, 50, 5.0, 1.0, 77);
  UmapParams p;
  p.n_neighbors = 15;
  p.out_dims = 2;
  p.seed = 42;
  const EmbeddingMatrix y = umap(blobs.x, p);
  const EmbeddingMatrix again = umap(blobs.x, p);
  const bool exact = y.values() == again.values();
  const double tw = trustworthiness(blobs.x, y, 15);
  const double a = ari(kmeans(y, 5, 42).assignment.labels, blobs.labels);
  return {tw >= 0.90 && a >= 0.9 && exact, "trustworthiness " + format_num("%.4f", tw) + ", k-means ARI " + format_num("%.4f", a) +
                                               ", rerun " + (exact ? "byte-identical" : "DIFFERS")};
}

// ---- 4. beta identities

Outcome beta_identities() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> g;
  double worst_sum = 0, worst_path = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng() % 64, d = 1 + rng() % 16;
    std::vector<double> a(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      // Mix dense rows with peaked ones.
      const double power = t % 3 == 0 ? 8.0 : 1.0;
      for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] = std::pow(u(rng), power);
      if (s == 0) a[i * n] = s = 1;
      for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= s;
    }
    const AttentionMatrix alpha(n, a);
    const auto beta = compute_beta(alpha);
    double sum = 0;
    for (double b : beta) sum += b;
    worst_sum = std::max(worst_sum, std::abs(sum - static_cast<double>(n)));
    std::vector<double> v(n * d);
    for (double& x : v) x = g(rng);
    const auto one = aggregate_token_values(alpha, v, d).sentence;
    const auto two = sentence_vector_from_beta(beta, v, d);
    for (std::size_t k = 0; k < d; ++k) worst_path = std::max(worst_path, std::abs(one[k] - two[k]));
  }
  return {worst_sum <= 1e-10 && worst_path <= 1e-10,
          "max |sum beta - n| " + format_num("%.2e", worst_sum) + ", max two-path |d| " + format_num("%.2e", worst_path)};
}

// ---- 5. layer selection

Outcome layer_selection() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  int layer_hits = 0, token_hits = 0, token_total = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t layers = 6 + rng() % 19, planted = rng() % layers;
    std::vector<BetaProfile> profiles;
    std::vector<std::size_t> hot_tokens;
    for (int doc = 0; doc < 25; ++doc) {
      const std::size_t n = 6 + rng() % 40, hot = 1 + rng() % (n - 2);
      BetaProfile p{"d" + std::to_string(doc), {}, std::vector<bool>(n, false)};
      p.special.front() = p.special.back() = true;
      for (std::size_t l = 0; l < layers; ++l) {
        std::vector<double> row(n);
        if (l == planted) {
          std::fill(row.begin(), row.end(), 0.1 * n / (n - 1));
          row[hot] = 0.9 * n;
        } else {
          double s = 0;
          for (double& v : row) s += v = jitter(rng);
          for (double& v : row) v *= n / s;
        }
        p.beta.push_back(std::move(row));
      }
      profiles.push_back(std::move(p));
      hot_tokens.push_back(hot);
    }
    const std::size_t chosen = select_layer(layer_stats(profiles));
    layer_hits += chosen == planted;
    for (std::size_t i = 0; i < profiles.size(); ++i, ++token_total) {
      token_hits += key_token(profiles[i], chosen) == std::optional<std::size_t>(hot_tokens[i]);
    }
  }
  return {layer_hits == 100 && token_hits == token_total,
          "planted layer " + std::to_string(layer_hits) + "/100, planted token " + std::to_string(token_hits) + "/" +
              std::to_string(token_total)};
}

// ---- 6. enhancement direction

const std::vector<std::string> kMarkers{"amber", "cobalt", "crimson", "jade"};

UmapParams fixture_umap() {
  UmapParams p;
  p.out_dims = 5;
  p.n_neighbors = 15;
  return p;
}

Outcome enhancement_direction() {
  testutil::TempDir dir;
  const PlantedCorpus planted = make_planted_corpus(kMarkers, 40, 99);
  BackendSpec spec;
  spec.executable = CLUSTOP_FIXTURE_BACKEND;
  spec.model = "fixture:markers=amber,cobalt,crimson,jade";
  spec.workdir = dir / "work";
  const HdbscanParams hp{10, 0};
  const EnhancementResult r = run_enhancement(planted.corpus, spec, fixture_umap(), hp);

  const double sil_orig = silhouette(r.original, planted.classes);
  const double sil_enh = silhouette(r.enhanced, planted.classes);
  const double ari_orig = ari(r.pseudo_clusters.labels, planted.classes);
  const ClusterAssignment enhanced_clusters = hdbscan(umap(r.enhanced, fixture_umap()), hp).assignment;
  const double ari_enh = ari(enhanced_clusters.labels, planted.classes);

  // A cluster's planted marker is the marker of its majority class.
  const TopicReport topics = attention_topics(r.tokenized, r.profiles, enhanced_clusters, 10);
  int headed = 0;
  for (const auto& c : topics.clusters) {
    std::map<int, int> votes;
    for (std::size_t i = 0; i < planted.classes.size(); ++i) {
      if (enhanced_clusters.labels[i] == c.label) ++votes[planted.classes[i]];
    }
    const int majority =
        std::max_element(votes.begin(), votes.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
    headed += !c.words.empty() && c.words.front().first == kMarkers[majority];
  }
  const double headed_frac = topics.clusters.empty() ? 0.0 : static_cast<double>(headed) / topics.clusters.size();
  return {sil_enh > sil_orig && ari_enh >= ari_orig && headed_frac >= 0.9,
          "silhouette " + format_num("%.4f", sil_orig) + " -> " + format_num("%.4f", sil_enh) + ", ARI " + format_num("%.4f", ari_orig) +
              " -> " + format_num("%.4f", ari_enh) + ", marker-headed clusters " + std::to_string(headed) + "/" +
              std::to_string(topics.clusters.size())};
}

// ---- 7. sweep

Outcome sweep_selection() {
  testutil::TempDir dir;
  const PlantedCorpus planted = make_planted_corpus(kMarkers, 40, 7);
  save_corpus(planted.corpus, dir / "corpus.jsonl");
  {
    std::ofstream out(dir / "labels.jsonl");
    for (std::size_t i = 0; i < planted.corpus.size(); ++i) {
      out << nlohmann::json{{"id", planted.corpus[i].id()}, {"label", planted.classes[i]}}.dump() << '\n';
    }
  }
  PipelineConfig c;
  c.corpus = dir / "corpus.jsonl";
  c.labels = dir / "labels.jsonl";
  c.backend.executable = CLUSTOP_FIXTURE_BACKEND;
  c.backend.model = "fixture:markers=amber,cobalt,crimson,jade";
  c.out_dir = dir / "out";
  c.min_cluster_size = 10;
  // Only min_cluster_size = 10 can resolve four classes of 40.
  const SweepGrid grid{{15}, {10, 60, 100, 150}, {0.5}, Objective::Nmi};
  const SweepResult r = cmd_sweep(c, grid);
  const std::string csv = testutil::read_file(r.csv);
  const auto data_rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) - 1;
  const SweepRow& best = r.rows[r.best];
  const bool selected = best.min_cluster_size == 10 && best.objective >= 0.9;
  return {selected && data_rows == sweep_size(grid, c.reducer, c.clusterer),
          "best min_cluster_size " + std::to_string(best.min_cluster_size.value_or(-1)) + " with NMI " +
              format_num("%.4f", best.objective) + ", CSV rows " + std::to_string(data_rows) + " of " +
              std::to_string(sweep_size(grid, c.reducer, c.clusterer))};
}

// ---- 8. c-TF-IDF

Outcome ctfidf_planted() {
  std::mt19937_64 rng(8);
  const std::vector<std::string> vocab[2] = {{"tide", "shore", "sand", "gull", "wave", "reef"},
                                             {"gear", "bolt", "piston", "valve", "crank", "shaft"}};
  const std::string planted[2] = {"harbor", "engine"};
  std::vector<Document> docs;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    const int c = i % 2;
    std::string text = planted[c];
    for (int w = 0; w < 6; ++w) text += " " + vocab[c][rng() % vocab[c].size()];
    if (i % 3 == 0) text += " " + planted[c];
    docs.push_back(Document::with_whitespace_words("d" + std::to_string(i), text));
    labels.push_back(c);
  }
  const ClusterAssignment a{labels, 2, "planted", {}};
  const TopicReport base = ctfidf_topics(Corpus(docs), a, 6);
  bool top1 = base.clusters.size() == 2;
  for (const auto& c : base.clusters) top1 = top1 && c.words.front().first == planted[c.label];

  double worst = 0;
  bool same_order = true;
  for (int copies = 2; copies <= 3; ++copies) {
    std::vector<Document> dup;
    std::vector<int> dup_labels;
    for (int k = 0; k < copies; ++k) {
      for (std::size_t i = 0; i < docs.size(); ++i) {
        dup.push_back(Document::with_whitespace_words(std::to_string(k) + docs[i].id(), docs[i].text()));
        dup_labels.push_back(labels[i]);
      }
    }
    const TopicReport r = ctfidf_topics(Corpus(dup), {dup_labels, 2, "planted", {}}, 6);
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t w = 0; w < base.clusters[c].words.size(); ++w) {
        same_order = same_order && r.clusters[c].words[w].first == base.clusters[c].words[w].first;
        worst = std::max(worst, std::abs(r.clusters[c].words[w].second - base.clusters[c].words[w].second));
      }
    }
  }
  return {top1 && same_order && worst <= 1e-12,
          std::string("top-1 ") + base.clusters[0].words.front().first + "/" + base.clusters[1].words.front().first +
              ", duplication max |d| " + format_num("%.2e", worst) + (same_order ? "" : ", ORDER CHANGED")};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double time_limit;  // seconds, 0 = none
  };
  const std::vector<Criterion> criteria = {
      {"metric-oracles", metric_oracles, 10.0},
      {"hdbscan-recovery", hdbscan_recovery, 30.0},
      {"umap-quality", umap_quality, 120.0},
      {"beta-identities", beta_identities, 0.0},
      {"layer-selection", layer_selection, 0.0},
      {"enhancement-direction", enhancement_direction, 0.0},
      {"sweep-selection", sweep_selection, 0.0},
      {"ctfidf-planted", ctfidf_planted, 0.0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      o.ok = false;
      o.detail += ", over the " + format_num("%.0f", c.time_limit) + " s limit";
    }
    std::printf("%s  %-22s %s (%.2f s)\n", o.ok ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.ok;
  }
  return failed;
}
