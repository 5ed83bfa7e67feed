#include "clustop/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <omp.h>
#include <spdlog/spdlog.h>
#include <sstream>

#include "clustop/enhance.hpp"
#include "clustop/error.hpp"
#include "clustop/plot.hpp"

namespace clustop {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Reducer r) { return r == Reducer::Pca ? "pca" : "umap"; }
std::string_view to_string(Clusterer c) {
  switch (c) {
    case Clusterer::Kmeans: return "kmeans";
    case Clusterer::Dbscan: return "dbscan";
    default: return "hdbscan";
  }
}
std::string_view to_string(TopicMethod t) { return t == TopicMethod::Ctfidf ? "ctfidf" : "attention"; }
std::string_view to_string(Objective o) { return o == Objective::Nmi ? "nmi" : "silhouette"; }

Reducer parse_reducer(std::string_view s) {
  if (s == "pca") return Reducer::Pca;
  if (s == "umap") return Reducer::Umap;
  throw InvalidArgument("unknown reducer: " + std::string(s));
}
Clusterer parse_clusterer(std::string_view s) {
  if (s == "kmeans") return Clusterer::Kmeans;
  if (s == "dbscan") return Clusterer::Dbscan;
  if (s == "hdbscan") return Clusterer::Hdbscan;
  throw InvalidArgument("unknown clusterer: " + std::string(s));
}
TopicMethod parse_topic_method(std::string_view s) {
  if (s == "attention") return TopicMethod::Attention;
  if (s == "ctfidf") return TopicMethod::Ctfidf;
  throw InvalidArgument("unknown topic method: " + std::string(s));
}
Objective parse_objective(std::string_view s) {
  if (s == "nmi" || s == "nmi-vs-labels") return Objective::Nmi;
  if (s == "silhouette") return Objective::Silhouette;
  throw InvalidArgument("unknown objective: " + std::string(s));
}

// ---------------------------------------------------------------- config

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

std::string real_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quoted(const std::string& s) { return json(s).dump(); }

}  // namespace

void PipelineConfig::validate() const {
  require(!corpus.empty(), "corpus path is required");
  require(fs::is_regular_file(corpus), "corpus not found: " + corpus.string());
  if (labels) require(fs::is_regular_file(*labels), "labels file not found: " + labels->string());
  require(!backend.executable.empty(), "backend executable is required");
  require(fs::exists(backend.executable), "backend executable not found: " + backend.executable.string());
  require(!backend.model.empty(), "model id is required");
  require(backend.finetune.epochs >= 1, "epochs must be at least 1");
  require(backend.finetune.learning_rate > 0, "learning rate must be positive");
  require(backend.finetune.batch_size >= 1, "batch size must be at least 1");
  require(out_dims >= 1, "out-dims must be at least 1");
  require(n_neighbors >= 2, "n-neighbors must be at least 2");
  require(min_dist > 0 && min_dist <= 1, "min-dist must lie in (0, 1]");
  require(umap_epochs >= 0, "umap-epochs must be non-negative");
  require(k >= 1, "k must be at least 1");
  require(eps > 0, "eps must be positive");
  require(min_cluster_size >= 2, "min-cluster-size must be at least 2");
  require(min_samples >= 0 && min_samples <= min_cluster_size,
          "min-samples must lie in [0, min-cluster-size]");
  require(enhance_n_neighbors == 0 || enhance_n_neighbors >= 2, "enhance-n-neighbors must be at least 2");
  require(enhance_out_dims >= 0, "enhance-out-dims must be non-negative");
  require(enhance_min_cluster_size == 0 || enhance_min_cluster_size >= 2,
          "enhance-min-cluster-size must be at least 2");
  require(top_k >= 1, "top-k must be at least 1");
  require(!layer || *layer >= 0, "layer must be non-negative");
  require(!out_dir.empty(), "output directory is required");
}

UmapParams PipelineConfig::umap_params() const {
  UmapParams p;
  p.n_neighbors = n_neighbors;
  p.min_dist = min_dist;
  p.out_dims = out_dims;
  p.n_epochs = umap_epochs;
  p.seed = seed;
  return p;
}

UmapParams PipelineConfig::enhance_umap_params() const {
  UmapParams p = umap_params();
  if (enhance_n_neighbors) p.n_neighbors = enhance_n_neighbors;
  if (enhance_out_dims) p.out_dims = enhance_out_dims;
  return p;
}

HdbscanParams PipelineConfig::hdbscan_params() const { return {min_cluster_size, min_samples}; }

HdbscanParams PipelineConfig::enhance_hdbscan_params() const {
  HdbscanParams p = hdbscan_params();
  if (enhance_min_cluster_size) {
    p.min_cluster_size = enhance_min_cluster_size;
    p.min_samples = std::min(p.min_samples, p.min_cluster_size);
  }
  return p;
}

fs::path PipelineConfig::workdir() const { return backend.workdir.empty() ? out_dir / "work" : backend.workdir; }

json PipelineConfig::to_json() const {
  json j = {{"corpus", corpus.string()},
            {"backend", backend.executable.string()},
            {"model", backend.model},
            {"workdir", workdir().string()},
            {"epochs", backend.finetune.epochs},
            {"lr", backend.finetune.learning_rate},
            {"batch", backend.finetune.batch_size},
            {"reducer", to_string(reducer)},
            {"out-dims", out_dims},
            {"n-neighbors", n_neighbors},
            {"min-dist", min_dist},
            {"umap-epochs", umap_epochs},
            {"clusterer", to_string(clusterer)},
            {"k", k},
            {"eps", eps},
            {"min-cluster-size", min_cluster_size},
            {"min-samples", min_samples},
            {"enhance-n-neighbors", enhance_n_neighbors},
            {"enhance-out-dims", enhance_out_dims},
            {"enhance-min-cluster-size", enhance_min_cluster_size},
            {"topic-method", to_string(topic_method)},
            {"top-k", top_k},
            {"out", out_dir.string()},
            {"seed", seed}};
  if (layer) j["layer"] = *layer;
  if (labels) j["labels"] = labels->string();
  return j;
}

std::string PipelineConfig::to_config_text() const {
  auto abs = [](const fs::path& p) { return fs::absolute(p).lexically_normal().string(); };
  std::ostringstream s;
  s << "corpus = " << quoted(abs(corpus)) << '\n'
    << "backend = " << quoted(abs(backend.executable)) << '\n'
    << "model = " << quoted(backend.model) << '\n'
    << "workdir = " << quoted(abs(workdir())) << '\n'
    << "epochs = " << backend.finetune.epochs << '\n'
    << "lr = " << real_text(backend.finetune.learning_rate) << '\n'
    << "batch = " << backend.finetune.batch_size << '\n'
    << "reducer = " << quoted(std::string(to_string(reducer))) << '\n'
    << "out-dims = " << out_dims << '\n'
    << "n-neighbors = " << n_neighbors << '\n'
    << "min-dist = " << real_text(min_dist) << '\n'
    << "umap-epochs = " << umap_epochs << '\n'
    << "clusterer = " << quoted(std::string(to_string(clusterer))) << '\n'
    << "k = " << k << '\n'
    << "eps = " << real_text(eps) << '\n'
    << "min-cluster-size = " << min_cluster_size << '\n'
    << "min-samples = " << min_samples << '\n'
    << "enhance-n-neighbors = " << enhance_n_neighbors << '\n'
    << "enhance-out-dims = " << enhance_out_dims << '\n'
    << "enhance-min-cluster-size = " << enhance_min_cluster_size << '\n'
    << "topic-method = " << quoted(std::string(to_string(topic_method))) << '\n'
    << "top-k = " << top_k << '\n';
  if (layer) s << "layer = " << *layer << '\n';
  if (labels) s << "labels = " << quoted(abs(*labels)) << '\n';
  s << "out = " << quoted(abs(out_dir)) << '\n' << "seed = " << seed << '\n';
  return s.str();
}

// ---------------------------------------------------------------- stages

EmbeddingMatrix reduce(const EmbeddingMatrix& x, const PipelineConfig& config) {
  if (config.reducer == Reducer::Pca) return pca(x, config.out_dims);
  return umap(x, config.umap_params());
}

ClusterAssignment cluster(const EmbeddingMatrix& y, const PipelineConfig& config) {
  switch (config.clusterer) {
    case Clusterer::Kmeans: return kmeans(y, config.k, config.seed).assignment;
    case Clusterer::Dbscan: return dbscan(y, config.eps, config.hdbscan_params().effective_min_samples());
    default: return hdbscan(y, config.hdbscan_params()).assignment;
  }
}

namespace {

template <typename F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

std::vector<std::string> corpus_ids(const Corpus& corpus) {
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& d : corpus.documents()) ids.push_back(d.id());
  return ids;
}

EmbeddingMatrix plot_layout(const EmbeddingMatrix& reduced) {
  if (reduced.cols() == 2) return reduced;
  if (reduced.cols() > 2) return pca(reduced, 2);
  EmbeddingMatrix out(reduced.rows(), 2);
  for (std::size_t i = 0; i < reduced.rows(); ++i) out(i, 0) = reduced(i, 0);
  return out;
}

}  // namespace

RunArtifacts cmd_run(const PipelineConfig& config) {
  config.validate();
  const Corpus corpus = in_stage("load", [&] { return load_corpus(config.corpus); });
  std::optional<std::vector<int>> truth;
  if (config.labels) {
    truth = in_stage("load", [&] { return align_labels(read_labels(*config.labels), corpus_ids(corpus)); });
  }
  fs::create_directories(config.out_dir);

  BackendSpec spec = config.backend;
  spec.workdir = config.workdir();
  const EnhancementResult enh = run_enhancement(corpus, spec, config.enhance_umap_params(),
                                                config.enhance_hdbscan_params());

  const EmbeddingMatrix reduced = in_stage("reduce", [&] { return reduce(enh.enhanced, config); });
  RunArtifacts art;
  art.assignment_value = in_stage("cluster", [&] { return cluster(reduced, config); });
  const auto& labels = art.assignment_value.labels;

  art.topics_value = in_stage("topics", [&] {
    if (config.topic_method == TopicMethod::Ctfidf) return ctfidf_topics(corpus, art.assignment_value, config.top_k);
    return attention_topics(enh.tokenized, enh.profiles, art.assignment_value, config.top_k, config.layer);
  });

  art.scores_value = in_stage("score", [&] {
    ScoreReport r;
    r.provenance = {{"embedding", "reduced"},
                    {"reducer", to_string(config.reducer)},
                    {"clusterer", to_string(config.clusterer)},
                    {"labels", truth.has_value()}};
    fill_internal(r, reduced, labels);
    if (truth) fill_external(r, labels, *truth);
    return r;
  });

  const EmbeddingMatrix layout = in_stage("plot", [&] { return plot_layout(reduced); });
  const std::string svg = in_stage("plot", [&] {
    return truth ? render_scatter_svg(layout, labels, std::span<const int>(*truth))
                 : render_scatter_svg(layout, labels);
  });

  art.assignment = config.out_dir / "assignment.jsonl";
  art.topics = config.out_dir / "topics.json";
  art.scores = config.out_dir / "scores.json";
  art.plot = config.out_dir / "plot.svg";
  art.manifest = config.out_dir / "manifest.json";
  const fs::path reduced_path = config.out_dir / "reduced.ctem";
  const fs::path layout_path = config.out_dir / "layout2d.ctem";
  const fs::path conf_path = config.out_dir / "run.conf";

  in_stage("write", [&] {
    write_assignment(art.assignment_value, corpus, art.assignment);
    write_topic_report(art.topics_value, art.topics);
    write_text(art.scores, art.scores_value.to_json().dump(2) + "\n");
    write_text(art.plot, svg);
    write_ctem(reduced, reduced_path);
    write_ctem(layout, layout_path);
    write_text(conf_path, config.to_config_text());

    json manifest = {
        {"command", "run"},
        {"replay", "clustop run --config " + conf_path.string()},
        {"config", config.to_json()},
        {"config_text", config.to_config_text()},
        {"corpus_fingerprint", corpus.fingerprint()},
        {"enhancement", enh.provenance()},
        {"artifacts",
         {{"assignment", art.assignment.filename().string()},
          {"topics", art.topics.filename().string()},
          {"scores", art.scores.filename().string()},
          {"plot", art.plot.filename().string()}}},
        {"intermediates",
         {{"assignment_meta", assignment_sidecar(art.assignment).filename().string()},
          {"reduced", reduced_path.filename().string()},
          {"layout2d", layout_path.filename().string()},
          {"enhanced_embedding", enh.enhanced_embedding_path.string()},
          {"beta", enh.beta_path.string()}}},
        {"result", {{"k", art.assignment_value.k}, {"noise", art.assignment_value.noise_count()}}}};
    if (art.topics_value.layer) manifest["layer"] = *art.topics_value.layer;
    write_text(art.manifest, manifest.dump(2) + "\n");
    return 0;
  });
  spdlog::info("run finished: k={} noise={}", art.assignment_value.k, art.assignment_value.noise_count());
  return art;
}

// ---------------------------------------------------------------- sweep

namespace {

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double to_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

}  // namespace

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split_list(text, ':');
    if (parts.size() != 3) throw InvalidArgument("range must be start:stop:step");
    const double a = to_real(parts[0]), b = to_real(parts[1]), step = to_real(parts[2]);
    if (!(step > 0) || b < a) throw InvalidArgument("range needs start <= stop and a positive step");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) {
      // Rounded so 0.1 steps print and compare cleanly.
      out.push_back(std::round((a + static_cast<double>(i) * step) * 1e9) / 1e9);
    }
  } else {
    for (const auto& p : split_list(text, ',')) out.push_back(to_real(p));
  }
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  for (double v : parse_real_list(text)) {
    if (v != std::floor(v)) throw InvalidArgument("expected integers in '" + std::string(text) + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::size_t sweep_size(const SweepGrid& g, Reducer reducer, Clusterer clusterer) {
  std::size_t n = 1;
  if (reducer == Reducer::Umap) n *= g.n_neighbors.size();
  if (clusterer != Clusterer::Kmeans) n *= g.min_cluster_size.size();
  if (clusterer == Clusterer::Dbscan) n *= g.eps.size();
  return n;
}

SweepResult cmd_sweep(const PipelineConfig& config, const SweepGrid& grid) {
  config.validate();
  SweepResult result;
  result.objective = grid.objective.value_or(config.labels ? Objective::Nmi : Objective::Silhouette);
  if (result.objective == Objective::Nmi && !config.labels) {
    throw InvalidArgument("objective nmi-vs-labels needs a labels file");
  }
  const bool use_nn = config.reducer == Reducer::Umap;
  const bool use_mcs = config.clusterer != Clusterer::Kmeans;
  const bool use_eps = config.clusterer == Clusterer::Dbscan;
  if ((use_nn && grid.n_neighbors.empty()) || (use_mcs && grid.min_cluster_size.empty()) ||
      (use_eps && grid.eps.empty())) {
    throw InvalidArgument("sweep grid axis is empty");
  }

  const Corpus corpus = in_stage("load", [&] { return load_corpus(config.corpus); });
  std::optional<std::vector<int>> truth;
  if (config.labels) {
    truth = in_stage("load", [&] { return align_labels(read_labels(*config.labels), corpus_ids(corpus)); });
  }
  fs::create_directories(config.out_dir);
  BackendSpec spec = config.backend;
  spec.workdir = config.workdir();
  const EnhancementResult enh = run_enhancement(corpus, spec, config.enhance_umap_params(),
                                                config.enhance_hdbscan_params());

  const std::vector<std::optional<int>> nn_axis = use_nn ? std::vector<std::optional<int>>(grid.n_neighbors.begin(), grid.n_neighbors.end())
                                                         : std::vector<std::optional<int>>{std::nullopt};
  const std::vector<std::optional<int>> mcs_axis = use_mcs ? std::vector<std::optional<int>>(grid.min_cluster_size.begin(), grid.min_cluster_size.end())
                                                           : std::vector<std::optional<int>>{std::nullopt};
  const std::vector<std::optional<double>> eps_axis = use_eps ? std::vector<std::optional<double>>(grid.eps.begin(), grid.eps.end())
                                                              : std::vector<std::optional<double>>{std::nullopt};

  // One reduction per n_neighbors value.
  const auto n_red = static_cast<std::ptrdiff_t>(nn_axis.size());
  std::vector<std::optional<EmbeddingMatrix>> reduced(nn_axis.size());
  std::vector<std::string> reduce_errors(nn_axis.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < n_red; ++r) {
    PipelineConfig c = config;
    if (nn_axis[r]) c.n_neighbors = *nn_axis[r];
    try {
      reduced[r] = reduce(enh.enhanced, c);
    } catch (const std::exception& e) {
      reduce_errors[r] = e.what();
    }
  }

  for (const auto& nn : nn_axis) {
    for (const auto& mcs : mcs_axis) {
      for (const auto& eps : eps_axis) result.rows.push_back({nn, mcs, eps, 0, corpus.size(), 0.0});
    }
  }
  const std::size_t per_red = mcs_axis.size() * eps_axis.size();
  const auto n_rows = static_cast<std::ptrdiff_t>(result.rows.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n_rows; ++i) {
    SweepRow& row = result.rows[i];
    const std::size_t r = static_cast<std::size_t>(i) / per_red;
    row.objective = nan;
    if (!reduced[r]) continue;
    PipelineConfig c = config;
    if (row.min_cluster_size) {
      c.min_cluster_size = *row.min_cluster_size;
      c.min_samples = std::min(c.min_samples, c.min_cluster_size);
    }
    if (row.eps) c.eps = *row.eps;
    try {
      const ClusterAssignment a = cluster(*reduced[r], c);
      row.k = a.k;
      row.noise = a.noise_count();
      if (result.objective == Objective::Nmi) {
        row.objective = nmi(a.labels, *truth);
      } else if (a.k >= 2) {
        row.objective = silhouette(*reduced[r], a.labels);
      }
    } catch (const std::exception& e) {
      row.objective = nan;
    }
  }
  for (std::size_t r = 0; r < reduce_errors.size(); ++r) {
    if (!reduce_errors[r].empty()) spdlog::warn("sweep: reduction failed: {}", reduce_errors[r]);
  }

  std::vector<std::size_t> order(result.rows.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    const SweepRow& x = result.rows[a];
    const SweepRow& y = result.rows[b];
    const bool xn = std::isnan(x.objective), yn = std::isnan(y.objective);
    if (xn != yn) return yn;
    if (!xn && x.objective != y.objective) return x.objective > y.objective;
    if (x.noise != y.noise) return x.noise < y.noise;
    const int xnn = x.n_neighbors.value_or(0), ynn = y.n_neighbors.value_or(0);
    if (xnn != ynn) return xnn < ynn;
    return a < b;
  };
  std::stable_sort(order.begin(), order.end(), better);
  result.best = order.front();

  auto cell_int = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  auto cell_real = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  std::ostringstream csv;
  csv << "n_neighbors,min_cluster_size,eps,k,noise,objective\n";
  for (const auto& row : result.rows) {
    csv << cell_int(row.n_neighbors) << ',' << cell_int(row.min_cluster_size) << ','
        << (row.eps ? cell_real(*row.eps) : "") << ',' << row.k << ',' << row.noise << ','
        << cell_real(row.objective) << '\n';
  }
  result.csv = config.out_dir / "sweep.csv";
  write_text(result.csv, csv.str());

  const SweepRow& best = result.rows[result.best];
  json best_json = {{"objective", to_string(result.objective)},
                    {"value", std::isnan(best.objective) ? json(nullptr) : json(best.objective)},
                    {"k", best.k},
                    {"noise", best.noise},
                    {"rows", result.rows.size()},
                    {"config", config.to_json()}};
  if (best.n_neighbors) best_json["n_neighbors"] = *best.n_neighbors;
  if (best.min_cluster_size) best_json["min_cluster_size"] = *best.min_cluster_size;
  if (best.eps) best_json["eps"] = *best.eps;
  write_text(config.out_dir / "sweep_best.json", best_json.dump(2) + "\n");
  return result;
}

// ---------------------------------------------------------------- eval / plot

ScoreReport cmd_eval(const fs::path& assignment_path, const fs::path& labels_path,
                     const std::optional<fs::path>& embedding) {
  std::vector<std::string> ids;
  const ClusterAssignment a = read_assignment(assignment_path, &ids);
  const std::vector<int> truth = align_labels(read_labels(labels_path), ids);
  ScoreReport r;
  r.provenance = {{"assignment", assignment_path.filename().string()},
                  {"labels", labels_path.filename().string()}};
  fill_external(r, a.labels, truth);
  if (embedding) {
    const EmbeddingMatrix y = read_ctem(*embedding);
    if (y.rows() != a.labels.size()) {
      throw InvalidArgument("embedding has " + std::to_string(y.rows()) + " rows but assignment has " +
                            std::to_string(a.labels.size()));
    }
    fill_internal(r, y, a.labels);
    r.provenance["embedding"] = embedding->filename().string();
  }
  return r;
}

void cmd_plot(const fs::path& embedding, const fs::path& assignment, const std::optional<fs::path>& labels,
              const fs::path& out) {
  const EmbeddingMatrix y = read_ctem(embedding);
  if (y.cols() != 2) {
    throw InvalidArgument("plot needs a 2-D embedding, got " + std::to_string(y.cols()) + " dimensions");
  }
  std::vector<std::string> ids;
  const ClusterAssignment a = read_assignment(assignment, &ids);
  if (y.rows() != a.labels.size()) throw InvalidArgument("embedding rows do not match the assignment");
  std::string svg;
  if (labels) {
    const std::vector<int> truth = align_labels(read_labels(*labels), ids);
    svg = render_scatter_svg(y, a.labels, std::span<const int>(truth));
  } else {
    svg = render_scatter_svg(y, a.labels);
  }
  write_text(out, svg);
}

// ---------------------------------------------------------------- backend-check

std::vector<CheckItem> backend_check(const BackendSpec& spec, const fs::path& corpus_path) {
  std::vector<CheckItem> items;
  auto check = [&](const std::string& name, auto&& body) {
    CheckItem item{name, false, ""};
    try {
      item.detail = body();
      item.ok = true;
    } catch (const std::exception& e) {
      item.detail = e.what();
    }
    items.push_back(item);
    return item.ok;
  };

  const Corpus corpus = load_corpus(corpus_path);
  const fs::path dir = spec.workdir.empty() ? fs::temp_directory_path() / "clustop-backend-check" : spec.workdir / "backend-check";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::optional<Backend> backend;

  if (!check("handshake", [&] {
        backend.emplace(spec.executable);
        return backend->handshake().dump();
      })) {
    return items;
  }
  const fs::path corpus_file = dir / "corpus.jsonl";
  save_corpus(corpus, corpus_file);

  Corpus tokenized;
  check("embed", [&] {
    backend->embed(corpus_file, spec.model, dir / "original.ctem");
    const EmbeddingMatrix m = read_ctem(dir / "original.ctem");
    if (m.rows() != corpus.size()) throw FormatError("embed returned " + std::to_string(m.rows()) + " rows");
    tokenized = attach_tokens(corpus, Backend::tokens_path_for(dir / "original.ctem"));
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", tokens attached";
  });
  check("attn", [&] {
    backend->attn(corpus_file, spec.model, dir / "beta.jsonl");
    if (tokenized.size() == 0) throw FormatError("no token file to validate against");
    const auto profiles = bind_profiles(read_beta_profiles(dir / "beta.jsonl"), tokenized);
    return std::to_string(profiles.size()) + " profiles, " + std::to_string(profiles.front().layers()) + " layers";
  });
  check("finetune", [&] {
    PseudoLabelSet labels;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      labels.ids.push_back(corpus[i].id());
      labels.labels.push_back(static_cast<int>(i % 2));
    }
    write_pseudo_labels(labels, dir / "labels.jsonl");
    FinetuneParams quick = spec.finetune;
    quick.epochs = 1;
    backend->finetune(corpus_file, dir / "labels.jsonl", spec.model, quick, dir / "model");
    if (!fs::is_directory(dir / "model")) throw FormatError("no model directory written");
    backend->embed(corpus_file, (dir / "model").string(), dir / "enhanced.ctem");
    const EmbeddingMatrix m = read_ctem(dir / "enhanced.ctem");
    if (m.rows() != corpus.size()) throw FormatError("fine-tuned embed returned " + std::to_string(m.rows()) + " rows");
    return std::string("model directory loads and embeds");
  });
  return items;
}

}  // namespace clustop
