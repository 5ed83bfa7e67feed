#include <algorithm>
#include <cmath>
#include <tuple>
#include <unordered_map>

#include "clustop/error.hpp"
#include "clustop/topics.hpp"

namespace clustop {

namespace {
constexpr double kRowTolerance = 1e-3;
}

AttentionMatrix::AttentionMatrix(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
  if (values_.size() != n * n) throw InvalidArgument("attention matrix must be n×n");
}

double AttentionMatrix::max_row_deviation() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

std::vector<double> compute_beta(const AttentionMatrix& alpha) {
  const std::size_t n = alpha.size();
  for (double v : alpha.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("attention: invalid entry");
  }
  if (alpha.max_row_deviation() > kRowTolerance) {
    throw InvalidArgument("attention: rows are not stochastic (corrupt backend export?)");
  }
  std::vector<double> beta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) beta[j] += alpha(i, j);
  }
  return beta;
}

TokenAggregation aggregate_token_values(const AttentionMatrix& alpha, std::span<const double> values,
                                        std::size_t dims) {
  const std::size_t n = alpha.size();
  if (values.size() != n * dims) throw InvalidArgument("aggregate_token_values: shape mismatch");
  TokenAggregation out;
  out.per_token.assign(n, std::vector<double>(dims, 0.0));
  out.sentence.assign(dims, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& e = out.per_token[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double w = alpha(i, j);
      for (std::size_t d = 0; d < dims; ++d) e[d] += w * values[j * dims + d];
    }
    for (std::size_t d = 0; d < dims; ++d) out.sentence[d] += e[d];
  }
  if (n > 0) {
    for (double& v : out.sentence) v /= static_cast<double>(n);
  }
  return out;
}

std::vector<double> sentence_vector_from_beta(std::span<const double> beta,
                                              std::span<const double> values, std::size_t dims) {
  const std::size_t n = beta.size();
  if (values.size() != n * dims) throw InvalidArgument("sentence_vector_from_beta: shape mismatch");
  std::vector<double> e(dims, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t d = 0; d < dims; ++d) e[d] += beta[j] * values[j * dims + d];
  }
  if (n > 0) {
    for (double& v : e) v /= static_cast<double>(n);
  }
  return e;
}

std::vector<BetaProfile> bind_profiles(std::vector<BetaProfile> profiles, const Corpus& corpus) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < profiles.size(); ++i) by_id.emplace(profiles[i].id, i);

  std::vector<BetaProfile> out;
  out.reserve(corpus.size());
  std::size_t layers = 0;
  for (const auto& doc : corpus.documents()) {
    auto it = by_id.find(doc.id());
    if (it == by_id.end()) throw InvalidArgument("beta profiles: missing document " + doc.id());
    BetaProfile p = std::move(profiles[it->second]);
    if (p.layers() == 0) throw InvalidArgument("beta profiles: no layers for " + doc.id());
    if (layers == 0) layers = p.layers();
    if (p.layers() != layers) throw InvalidArgument("beta profiles: layer count differs for " + doc.id());
    const std::size_t n = doc.tokens().size();
    for (const auto& layer : p.beta) {
      if (layer.size() != n) {
        throw InvalidArgument("beta profiles: " + doc.id() + " has " + std::to_string(layer.size()) +
                              " values for " + std::to_string(n) + " tokens");
      }
      double s = 0.0;
      for (double v : layer) s += v;
      if (std::abs(s - static_cast<double>(n)) > kRowTolerance) {
        throw InvalidArgument("beta profiles: layer sum differs from token count for " + doc.id());
      }
    }
    p.special.resize(n);
    for (std::size_t t = 0; t < n; ++t) p.special[t] = doc.tokens()[t].special;
    out.push_back(std::move(p));
  }
  return out;
}

LayerStats layer_stats(std::span<const BetaProfile> profiles) {
  LayerStats stats;
  if (profiles.empty()) return stats;
  const std::size_t L = profiles.front().layers();
  stats.layers.assign(L, {});
  std::vector<double> vals;
  for (const auto& p : profiles) {
    if (p.layers() != L) throw InvalidArgument("layer_stats: documents disagree on layer count");
    for (std::size_t l = 0; l < L; ++l) {
      vals.clear();
      const auto& beta = p.beta[l];
      for (std::size_t t = 0; t < beta.size(); ++t) {
        const bool special = t < p.special.size() && p.special[t];
        if (!special) vals.push_back(beta[t]);
      }
      if (vals.empty()) continue;
      const double n = static_cast<double>(vals.size());
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= n;
      if (mean == 0.0) throw InvalidArgument("layer_stats: zero-mean beta in " + p.id);
      double m2 = 0.0, m4 = 0.0;
      for (double v : vals) {
        const double c = v - mean;
        m2 += c * c;
        m4 += c * c * c * c;
      }
      m2 /= n;
      m4 /= n;
      const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
      LayerStat& s = stats.layers[l];
      s.cov += std::sqrt(m2) / mean;
      s.rr += (*hi - *lo) / mean;
      ++s.sentences;
      if (vals.size() >= 3 && m2 > 0.0) {
        s.kurt += m4 / (m2 * m2) - 3.0;
        ++s.kurt_sentences;
      }
    }
  }
  for (auto& s : stats.layers) {
    if (s.sentences > 0) {
      s.cov /= static_cast<double>(s.sentences);
      s.rr /= static_cast<double>(s.sentences);
    }
    if (s.kurt_sentences > 0) s.kurt /= static_cast<double>(s.kurt_sentences);
  }
  return stats;
}

std::size_t select_layer(const LayerStats& stats, std::optional<int> override_layer) {
  const std::size_t L = stats.layers.size();
  if (L == 0) throw InvalidArgument("select_layer: no layers");
  if (override_layer) {
    if (*override_layer < 0 || static_cast<std::size_t>(*override_layer) >= L) {
      throw InvalidArgument("select_layer: override " + std::to_string(*override_layer) +
                            " out of range [0," + std::to_string(L) + ")");
    }
    return static_cast<std::size_t>(*override_layer);
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < L; ++l) {
    const auto& a = stats.layers[l];
    const auto& b = stats.layers[best];
    if (std::tie(a.kurt, a.cov, a.rr) > std::tie(b.kurt, b.cov, b.rr)) best = l;
  }
  return best;
}

std::optional<std::size_t> key_token(const BetaProfile& profile, std::size_t layer) {
  if (layer >= profile.layers()) throw InvalidArgument("key_token: layer out of range");
  const auto& beta = profile.beta[layer];
  std::optional<std::size_t> best;
  for (std::size_t t = 0; t < beta.size(); ++t) {
    if (t < profile.special.size() && profile.special[t]) continue;
    if (!best || beta[t] > beta[*best]) best = t;
  }
  return best;
}

std::optional<std::string> token_to_word(const Document& doc, std::size_t token_index) {
  if (token_index >= doc.tokens().size()) throw InvalidArgument("token_to_word: token index out of range");
  const Token& t = doc.tokens()[token_index];
  if (t.special) return std::nullopt;
  const auto w = doc.containing_word(t.span);
  if (!w) return std::nullopt;
  return doc.word(*w);
}

TopicReport cluster_topics(const ClusterAssignment& assignment,
                           std::span<const std::optional<std::string>> keywords, int top_k) {
  if (top_k < 1) throw InvalidArgument("cluster_topics: K must be positive");
  if (keywords.size() != assignment.labels.size()) {
    throw InvalidArgument("cluster_topics: keyword list not aligned with assignment");
  }
  struct Tally {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::vector<std::unordered_map<std::string, Tally>> tallies(static_cast<std::size_t>(assignment.k));
  std::vector<std::size_t> unmapped(static_cast<std::size_t>(assignment.k), 0);
  for (std::size_t i = 0; i < keywords.size(); ++i) {
    const int label = assignment.labels[i];
    if (label == kNoise) continue;
    const auto c = static_cast<std::size_t>(label);
    if (!keywords[i]) {
      ++unmapped[c];
      continue;
    }
    auto [it, inserted] = tallies[c].try_emplace(*keywords[i], Tally{0, i});
    ++it->second.count;
  }

  TopicReport report{"attention", std::nullopt, {}};
  for (std::size_t c = 0; c < tallies.size(); ++c) {
    std::vector<std::pair<std::string, Tally>> ranked(tallies[c].begin(), tallies[c].end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second.count != b.second.count) return a.second.count > b.second.count;
      return a.second.first < b.second.first;
    });
    ClusterTopics ct{static_cast<int>(c), {}, unmapped[c]};
    for (std::size_t r = 0; r < ranked.size() && r < static_cast<std::size_t>(top_k); ++r) {
      ct.words.emplace_back(ranked[r].first, static_cast<double>(ranked[r].second.count));
    }
    report.clusters.push_back(std::move(ct));
  }
  return report;
}

TopicReport attention_topics(const Corpus& corpus, std::span<const BetaProfile> profiles,
                             const ClusterAssignment& assignment, int top_k,
                             std::optional<int> layer_override) {
  if (profiles.size() != corpus.size()) throw InvalidArgument("attention_topics: profile count mismatch");
  const std::size_t layer = select_layer(layer_stats(profiles), layer_override);
  std::vector<std::optional<std::string>> keywords(corpus.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(corpus.size()); ++si) {
    const auto i = static_cast<std::size_t>(si);
    if (const auto t = key_token(profiles[i], layer)) keywords[i] = token_to_word(corpus[i], *t);
  }
  TopicReport report = cluster_topics(assignment, keywords, top_k);
  report.layer = static_cast<int>(layer);
  return report;
}

}  // namespace clustop
