#include <cstdio>
#include <set>
#include <utility>

#include "clustop/cluster.hpp"
#include "clustop/metrics.hpp"

namespace clustop {

namespace {

std::vector<std::pair<const char*, const std::optional<double>*>> fields(const ScoreReport& r) {
  return {{"ari", &r.ari},
          {"ami", &r.ami},
          {"nmi", &r.nmi},
          {"purity", &r.purity},
          {"pair_precision", &r.pair_precision},
          {"pair_recall", &r.pair_recall},
          {"pair_accuracy", &r.pair_accuracy},
          {"pair_f1", &r.pair_f1},
          {"silhouette", &r.silhouette},
          {"calinski_harabasz", &r.calinski_harabasz},
          {"davies_bouldin", &r.davies_bouldin}};
}

}  // namespace

nlohmann::json ScoreReport::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, value] : fields(*this)) {
    if (value->has_value()) out[name] = **value;
  }
  if (!provenance.empty()) out["provenance"] = provenance;
  return out;
}

std::string ScoreReport::to_table() const {
  std::string out;
  char line[96];
  for (const auto& [name, value] : fields(*this)) {
    if (value->has_value()) {
      std::snprintf(line, sizeof line, "%-20s %12.6f\n", name, **value);
    } else {
      std::snprintf(line, sizeof line, "%-20s %12s\n", name, "-");
    }
    out += line;
  }
  return out;
}

void fill_external(ScoreReport& report, LabelView pred, LabelView truth) {
  report.ari = ari(pred, truth);
  report.ami = ami(pred, truth);
  report.nmi = nmi(pred, truth);
  report.purity = purity(pred, truth);
  const PairScores p = pair_scores(pred, truth);
  report.pair_precision = p.precision;
  report.pair_recall = p.recall;
  report.pair_accuracy = p.accuracy;
  report.pair_f1 = p.f1;
}

void fill_internal(ScoreReport& report, const EmbeddingMatrix& y, LabelView pred) {
  std::set<int> clusters;
  for (int l : pred) {
    if (l != kNoise) clusters.insert(l);
  }
  if (clusters.size() < 2) return;
  report.silhouette = silhouette(y, pred);
  report.calinski_harabasz = calinski_harabasz(y, pred);
  report.davies_bouldin = davies_bouldin(y, pred);
}

}  // namespace clustop
