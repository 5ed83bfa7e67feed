#include "clustop/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <spdlog/spdlog.h>

#include "clustop/error.hpp"

namespace clustop {

namespace fs = std::filesystem;

namespace {

/// Raw option values, converted to PipelineConfig after parsing.
struct RunOptions {
  PipelineConfig config;
  std::string backend, reducer = "umap", clusterer = "hdbscan", topic_method = "attention";
  std::string workdir, labels;
  int layer = -1;
  bool verbose = false;
  std::string config_file;

  PipelineConfig finish() {
    PipelineConfig c = config;
    c.backend.executable = resolve_backend_executable(backend.empty() ? std::nullopt : std::optional<fs::path>(backend));
    c.backend.workdir = workdir;
    c.reducer = parse_reducer(reducer);
    c.clusterer = parse_clusterer(clusterer);
    c.topic_method = parse_topic_method(topic_method);
    if (layer >= 0) c.layer = layer;
    if (!labels.empty()) c.labels = fs::path(labels);
    return c;
  }
};

void add_run_options(CLI::App& app, RunOptions& o) {
  PipelineConfig& c = o.config;
  app.add_option("--config", o.config_file, "flat key = value file; command-line flags win");
  app.add_option("--corpus", c.corpus, "corpus JSONL");
  app.add_option("--backend", o.backend, "backend executable (default: $CLUSTOP_BACKEND)");
  app.add_option("--model", c.backend.model, "backend model id");
  app.add_option("--workdir", o.workdir, "backend working directory (default: <out>/work)");
  app.add_option("--epochs", c.backend.finetune.epochs, "fine-tune epochs")->capture_default_str();
  app.add_option("--lr", c.backend.finetune.learning_rate, "fine-tune learning rate")->capture_default_str();
  app.add_option("--batch", c.backend.finetune.batch_size, "fine-tune batch size")->capture_default_str();
  app.add_option("--reducer", o.reducer, "pca or umap")->capture_default_str();
  app.add_option("--out-dims", c.out_dims, "reduced dimensions")->capture_default_str();
  app.add_option("--n-neighbors", c.n_neighbors, "UMAP n_neighbors")->capture_default_str();
  app.add_option("--min-dist", c.min_dist, "UMAP min_dist")->capture_default_str();
  app.add_option("--umap-epochs", c.umap_epochs, "UMAP epochs (0 = automatic)")->capture_default_str();
  app.add_option("--clusterer", o.clusterer, "kmeans, dbscan, or hdbscan")->capture_default_str();
  app.add_option("--k", c.k, "k-means cluster count")->capture_default_str();
  app.add_option("--eps", c.eps, "DBSCAN radius")->capture_default_str();
  app.add_option("--min-cluster-size", c.min_cluster_size, "HDBSCAN min cluster size")->capture_default_str();
  app.add_option("--min-samples", c.min_samples, "density min samples (0 = min-cluster-size)")->capture_default_str();
  app.add_option("--enhance-n-neighbors", c.enhance_n_neighbors, "n_neighbors for the enhancement round");
  app.add_option("--enhance-out-dims", c.enhance_out_dims, "out-dims for the enhancement round");
  app.add_option("--enhance-min-cluster-size", c.enhance_min_cluster_size,
                 "min-cluster-size for the enhancement round");
  app.add_option("--topic-method", o.topic_method, "attention or ctfidf")->capture_default_str();
  app.add_option("--top-k", c.top_k, "keywords per cluster")->capture_default_str();
  app.add_option("--layer", o.layer, "attention layer override");
  app.add_option("--labels", o.labels, "reference labels JSONL");
  app.add_option("--out", c.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", c.seed, "random seed")->capture_default_str();
  app.add_flag("-v,--verbose", o.verbose, "debug logging");
}

/// Appends `--key value` for every config-file key the arguments do not
/// already set, so flags win on conflict. The `--config` option is consumed.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (path.empty()) return kept;
  if (!fs::is_regular_file(path)) throw InvalidArgument("config file not found: " + path);
  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    for (const auto& a : kept) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  std::vector<std::string> extra;
  for (const CLI::ConfigItem& item : CLI::ConfigTOML().from_file(path)) {
    if (!item.parents.empty() || item.name == "++" || item.name == "--" || given(item.name)) continue;
    extra.push_back("--" + item.name);
    extra.insert(extra.end(), item.inputs.begin(), item.inputs.end());
  }
  kept.insert(kept.end(), extra.begin(), extra.end());
  return kept;
}

void print_scores(const ScoreReport& r) { std::cout << r.to_table(); }

}  // namespace

PipelineConfig parse_run_args(const std::vector<std::string>& args) {
  CLI::App app("clustop run");
  RunOptions o;
  add_run_options(app, o);
  const auto merged = merge_config(args);
  std::vector<std::string> reversed(merged.rbegin(), merged.rend());
  app.parse(reversed);
  return o.finish();
}

int cli_main(int argc, const char* const* argv) {
  CLI::App app("clustop: enhanced-embedding clustering and topic extraction");
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "full pipeline: enhance, reduce, cluster, topics");
  add_run_options(*run, run_opts);

  RunOptions sweep_opts;
  std::string grid_nn = "15", grid_mcs = "5", grid_eps = "0.5", objective;
  auto* sweep = app.add_subcommand("sweep", "grid search over n-neighbors, min-cluster-size, eps");
  add_run_options(*sweep, sweep_opts);
  sweep->add_option("--grid-n-neighbors", grid_nn, "list a,b,c or range start:stop:step")->capture_default_str();
  sweep->add_option("--grid-min-cluster-size", grid_mcs, "list or range")->capture_default_str();
  sweep->add_option("--grid-eps", grid_eps, "list or range")->capture_default_str();
  sweep->add_option("--objective", objective, "nmi or silhouette (default: nmi when labels are given)");

  std::string assignment, labels, embedding, out;
  auto* eval = app.add_subcommand("eval", "score an assignment against reference labels");
  eval->add_option("--assignment", assignment, "assignment JSONL")->required();
  eval->add_option("--labels", labels, "reference labels JSONL")->required();
  eval->add_option("--embedding", embedding, "CTEM embedding for internal metrics");
  eval->add_option("--out", out, "write the report as JSON");

  auto* plot = app.add_subcommand("plot", "render a 2-D embedding as SVG");
  plot->add_option("--embedding", embedding, "2-D CTEM embedding")->required();
  plot->add_option("--assignment", assignment, "assignment JSONL")->required();
  plot->add_option("--labels", labels, "reference labels JSONL for glyphs");
  plot->add_option("--out", out, "SVG path")->required();

  std::string check_backend, check_model, check_corpus, check_workdir;
  auto* check = app.add_subcommand("backend-check", "validate a backend against the protocol");
  check->add_option("--backend", check_backend, "backend executable (default: $CLUSTOP_BACKEND)");
  check->add_option("--model", check_model, "model id")->required();
  check->add_option("--corpus", check_corpus, "small corpus JSONL")->required();
  check->add_option("--workdir", check_workdir, "scratch directory");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (!args.empty() && (args[0] == "run" || args[0] == "sweep")) {
      auto rest = merge_config({args.begin() + 1, args.end()});
      rest.insert(rest.begin(), args[0]);
      args = std::move(rest);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) {
      if (run_opts.verbose) spdlog::set_level(spdlog::level::debug);
      const RunArtifacts art = cmd_run(run_opts.finish());
      std::cout << "k=" << art.assignment_value.k << " noise=" << art.assignment_value.noise_count() << "\n"
                << "manifest: " << art.manifest.string() << "\n";
    } else if (sweep->parsed()) {
      if (sweep_opts.verbose) spdlog::set_level(spdlog::level::debug);
      SweepGrid grid{parse_int_list(grid_nn), parse_int_list(grid_mcs), parse_real_list(grid_eps), std::nullopt};
      if (!objective.empty()) grid.objective = parse_objective(objective);
      const SweepResult r = cmd_sweep(sweep_opts.finish(), grid);
      const SweepRow& best = r.rows[r.best];
      std::cout << "rows=" << r.rows.size() << " best:";
      if (best.n_neighbors) std::cout << " n_neighbors=" << *best.n_neighbors;
      if (best.min_cluster_size) std::cout << " min_cluster_size=" << *best.min_cluster_size;
      if (best.eps) std::cout << " eps=" << *best.eps;
      std::cout << " " << to_string(r.objective) << "=" << best.objective << "\ncsv: " << r.csv.string() << "\n";
    } else if (eval->parsed()) {
      const ScoreReport r = cmd_eval(assignment, labels,
                                     embedding.empty() ? std::nullopt : std::optional<fs::path>(embedding));
      print_scores(r);
      if (!out.empty()) {
        std::ofstream f(out);
        f << r.to_json().dump(2) << '\n';
      }
    } else if (plot->parsed()) {
      cmd_plot(embedding, assignment, labels.empty() ? std::nullopt : std::optional<fs::path>(labels), out);
    } else if (check->parsed()) {
      BackendSpec spec;
      spec.executable = resolve_backend_executable(check_backend.empty() ? std::nullopt
                                                                         : std::optional<fs::path>(check_backend));
      spec.model = check_model;
      spec.workdir = check_workdir;
      bool ok = true;
      for (const auto& item : backend_check(spec, check_corpus)) {
        std::cout << (item.ok ? "PASS " : "FAIL ") << item.name << ": " << item.detail << "\n";
        ok = ok && item.ok;
      }
      return ok ? 0 : 1;
    }
  } catch (const StageError& e) {
    std::cerr << "error: stage " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace clustop
