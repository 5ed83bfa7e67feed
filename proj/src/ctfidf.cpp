#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "clustop/error.hpp"
#include "clustop/topics.hpp"

namespace clustop {

TopicReport ctfidf_topics(const Corpus& corpus, const ClusterAssignment& assignment, int top_k) {
  if (top_k < 1) throw InvalidArgument("ctfidf_topics: K must be positive");
  if (assignment.labels.size() != corpus.size()) {
    throw InvalidArgument("ctfidf_topics: assignment length does not match corpus");
  }
  const auto k = static_cast<std::size_t>(assignment.k);

  std::unordered_map<std::string, std::size_t> vocab;  // word -> first-occurrence id
  std::vector<std::unordered_map<std::size_t, double>> counts(k);
  std::vector<double> cluster_total(k, 0.0);
  std::vector<double> word_total;
  std::vector<std::string> words;

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const int label = assignment.labels[i];
    if (label == kNoise) continue;
    const auto c = static_cast<std::size_t>(label);
    const Document& doc = corpus[i];
    for (std::size_t w = 0; w < doc.words().size(); ++w) {
      auto [it, inserted] = vocab.try_emplace(doc.word(w), words.size());
      if (inserted) {
        words.push_back(it->first);
        word_total.push_back(0.0);
      }
      counts[c][it->second] += 1.0;
      word_total[it->second] += 1.0;
      cluster_total[c] += 1.0;
    }
  }

  double all_words = 0.0;
  for (double t : cluster_total) all_words += t;
  const double avg_words = k > 0 ? all_words / static_cast<double>(k) : 0.0;

  TopicReport report{"ctfidf", std::nullopt, {}};
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::pair<std::size_t, double>> scored;
    scored.reserve(counts[c].size());
    for (const auto& [w, count] : counts[c]) {
      const double tf = count / cluster_total[c];
      scored.emplace_back(w, tf * std::log(1.0 + avg_words / word_total[w]));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    ClusterTopics ct{static_cast<int>(c), {}, 0};
    for (std::size_t r = 0; r < scored.size() && r < static_cast<std::size_t>(top_k); ++r) {
      ct.words.emplace_back(words[scored[r].first], scored[r].second);
    }
    report.clusters.push_back(std::move(ct));
  }
  return report;
}

}  // namespace clustop
