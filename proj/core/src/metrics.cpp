#include "spamgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "spamgraph/error.hpp"

namespace spamgraph {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw InvalidArgument("scores and labels differ in length");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvalidArgument("labels must be 0 or 1");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw InvalidArgument("scores contain NaN");
  }
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    while (end < n && scores[order[end]] == scores[order[start]]) ++end;
    // Ranks start..end-1 (0-based) share the average 1-based rank.
    const double avg_rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t k = start; k < end; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    start = end;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw InvalidArgument("AUC needs at least one positive and one negative label");
  }
  const double p = static_cast<double>(n_pos);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

RatioMetrics precision_recall_at_ratio(std::span<const double> scores,
                                       std::span<const int> labels, double ratio) {
  check_inputs(scores, labels);
  if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("ratio must be in (0, 1]");
  RatioMetrics m;
  m.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (m.positives == 0) throw InvalidArgument("precision/recall need at least one positive label");
  m.k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(scores.size()) + 0.5));
  if (m.k == 0) throw InvalidArgument("ratio selects zero nodes after rounding");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  for (std::size_t r = 0; r < m.k; ++r) m.true_positives += labels[order[r]] == 1 ? 1 : 0;
  m.precision = static_cast<double>(m.true_positives) / static_cast<double>(m.k);
  m.recall = static_cast<double>(m.true_positives) / static_cast<double>(m.positives);
  return m;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0 || neg == 0) throw InvalidArgument("ROC needs both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> points{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  double tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    while (k < order.size() && scores[order[k]] == s) {
      (labels[order[k]] == 1 ? tp : fp) += 1;
      ++k;
    }
    points.push_back({fp / neg, tp / pos, s});
  }
  return points;
}

std::string metrics_json(double auc_value, const RatioMetrics& at_ratio, double ratio,
                         std::size_t nodes) {
  nlohmann::ordered_json out;
  out["auc"] = auc_value;
  out["precision"] = at_ratio.precision;
  out["recall"] = at_ratio.recall;
  out["ratio"] = ratio;
  out["k"] = at_ratio.k;
  out["nodes"] = nodes;
  out["positives"] = at_ratio.positives;
  return out.dump(2);
}

}  // namespace spamgraph
