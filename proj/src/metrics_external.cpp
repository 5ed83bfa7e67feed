#include <algorithm>
#include <cmath>
#include <map>

#include "clustop/cluster.hpp"
#include "clustop/error.hpp"
#include "clustop/metrics.hpp"

namespace clustop {

namespace {

double comb2(std::int64_t x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

void require_same_length(LabelView a, LabelView b, const char* what) {
  if (a.size() != b.size()) throw InvalidArgument(std::string(what) + ": label length mismatch");
}

bool same_partition(const ContingencyTable& t) {
  for (std::size_t r = 0; r < t.rows(); ++r) {
    std::size_t nonzero = 0;
    for (std::size_t c = 0; c < t.cols(); ++c) nonzero += t(r, c) > 0;
    if (nonzero != 1) return false;
  }
  for (std::size_t c = 0; c < t.cols(); ++c) {
    std::size_t nonzero = 0;
    for (std::size_t r = 0; r < t.rows(); ++r) nonzero += t(r, c) > 0;
    if (nonzero != 1) return false;
  }
  return true;
}

}  // namespace

ContingencyTable::ContingencyTable(LabelView a, LabelView b) {
  require_same_length(a, b, "contingency");
  std::map<int, std::size_t> ra, cb;
  for (int l : a) ra.emplace(l, 0);
  for (int l : b) cb.emplace(l, 0);
  for (auto& [label, idx] : ra) {
    idx = row_labels_.size();
    row_labels_.push_back(label);
  }
  for (auto& [label, idx] : cb) {
    idx = col_labels_.size();
    col_labels_.push_back(label);
  }
  counts_.assign(rows() * cols(), 0);
  row_sums_.assign(rows(), 0);
  col_sums_.assign(cols(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t r = ra[a[i]];
    const std::size_t c = cb[b[i]];
    ++counts_[r * cols() + c];
    ++row_sums_[r];
    ++col_sums_[c];
  }
  total_ = static_cast<std::int64_t>(a.size());
}

double ari(LabelView a, LabelView b) {
  require_same_length(a, b, "ari");
  if (a.size() < 2) throw InvalidArgument("ari: need at least two items");
  const ContingencyTable t(a, b);
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) index += comb2(t(r, c));
  }
  for (std::size_t r = 0; r < t.rows(); ++r) sum_a += comb2(t.row_sum(r));
  for (std::size_t c = 0; c < t.cols(); ++c) sum_b += comb2(t.col_sum(c));
  const double expected = sum_a * sum_b / comb2(t.total());
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double entropy(std::span<const std::int64_t> counts, std::int64_t total) {
  double h = 0.0;
  const double n = static_cast<double>(total);
  for (auto c : counts) {
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

double mutual_info(const ContingencyTable& t) {
  const double n = static_cast<double>(t.total());
  double mi = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const auto nij = t(r, c);
      if (nij == 0) continue;
      const double x = static_cast<double>(nij);
      mi += x / n * std::log(n * x / (static_cast<double>(t.row_sum(r)) * static_cast<double>(t.col_sum(c))));
    }
  }
  return std::max(mi, 0.0);
}

double expected_mutual_info(const ContingencyTable& t) {
  const std::int64_t n = t.total();
  const double nd = static_cast<double>(n);
  const double lg_n = std::lgamma(nd + 1.0);
  double emi = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const std::int64_t a = t.row_sum(r);
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const std::int64_t b = t.col_sum(c);
      const double head = std::lgamma(a + 1.0) + std::lgamma(b + 1.0) + std::lgamma(nd - a + 1.0) +
                          std::lgamma(nd - b + 1.0) - lg_n;
      const std::int64_t lo = std::max<std::int64_t>(1, a + b - n);
      const std::int64_t hi = std::min(a, b);
      for (std::int64_t nij = lo; nij <= hi; ++nij) {
        const double x = static_cast<double>(nij);
        const double log_p = head - std::lgamma(x + 1.0) - std::lgamma(a - x + 1.0) -
                             std::lgamma(b - x + 1.0) - std::lgamma(nd - a - b + x + 1.0);
        emi += x / nd * std::log(nd * x / (static_cast<double>(a) * static_cast<double>(b))) *
               std::exp(log_p);
      }
    }
  }
  return emi;
}

double mutual_info_family(LabelView a, LabelView b, MiVariant variant) {
  require_same_length(a, b, "mutual_info");
  if (a.empty()) throw InvalidArgument("mutual_info: empty labelings");
  const ContingencyTable t(a, b);
  std::vector<std::int64_t> rs(t.rows()), cs(t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) rs[r] = t.row_sum(r);
  for (std::size_t c = 0; c < t.cols(); ++c) cs[c] = t.col_sum(c);
  const double mean_h = 0.5 * (entropy(rs, t.total()) + entropy(cs, t.total()));
  const double mi = mutual_info(t);

  double num = mi;
  double den = mean_h;
  if (variant == MiVariant::Ami) {
    const double emi = expected_mutual_info(t);
    num = mi - emi;
    den = mean_h - emi;
  }
  if (std::abs(den) <= 1e-12) return same_partition(t) ? 1.0 : 0.0;
  return num / den;
}

double purity(LabelView pred, LabelView truth) {
  require_same_length(pred, truth, "purity");
  if (pred.empty()) throw InvalidArgument("purity: empty labelings");
  const ContingencyTable t(pred, truth);
  std::int64_t hit = 0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    std::int64_t best = 0;
    for (std::size_t c = 0; c < t.cols(); ++c) best = std::max(best, t(r, c));
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(t.total());
}

PairScores pair_scores(LabelView pred, LabelView truth) {
  require_same_length(pred, truth, "pair_scores");
  if (pred.size() < 2) throw InvalidArgument("pair_scores: need at least two items");
  const ContingencyTable t(pred, truth);
  double tp = 0.0, pred_pos = 0.0, truth_pos = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    if (t.row_labels()[r] == kNoise) continue;
    pred_pos += comb2(t.row_sum(r));
    for (std::size_t c = 0; c < t.cols(); ++c) tp += comb2(t(r, c));
  }
  for (std::size_t c = 0; c < t.cols(); ++c) truth_pos += comb2(t.col_sum(c));

  PairScores s;
  s.tp = static_cast<std::int64_t>(tp);
  s.fp = static_cast<std::int64_t>(pred_pos - tp);
  s.fn = static_cast<std::int64_t>(truth_pos - tp);
  s.tn = static_cast<std::int64_t>(comb2(t.total())) - s.tp - s.fp - s.fn;
  auto ratio = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
  s.precision = ratio(tp, pred_pos);
  s.recall = ratio(tp, truth_pos);
  s.accuracy = ratio(static_cast<double>(s.tp + s.tn), comb2(t.total()));
  s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  return s;
}

}  // namespace clustop
