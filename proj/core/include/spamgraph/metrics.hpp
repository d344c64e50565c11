#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace spamgraph {

// Area under the ROC curve via the Mann-Whitney rank sum, with average ranks
// for tied scores. Labels are 0/1. Throws when only one class is present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct RatioMetrics {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t k = 0;
  std::size_t true_positives = 0;
  std::size_t positives = 0;
};

// Flags the top k = round-half-up(ratio * n) scores as spam (ties broken by
// ascending index) and reports precision = TP / k and recall = TP / P.
RatioMetrics precision_recall_at_ratio(std::span<const double> scores,
                                       std::span<const int> labels, double ratio);

// {"auc", "precision", "recall", "ratio", "k", "nodes", "positives"}
std::string metrics_json(double auc_value, const RatioMetrics& at_ratio, double ratio,
                         std::size_t nodes);

struct RocPoint {
  double false_positive_rate = 0.0;
  double true_positive_rate = 0.0;
  double threshold = 0.0;
};

// ROC curve with one point per distinct score (descending), starting at (0, 0).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);

}  // namespace spamgraph
