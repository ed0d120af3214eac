#include "drsl/metrics.hpp"

#include "drsl/errors.hpp"

namespace drsl {

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw MetricError("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                      std::to_string(labels.size()) + " labels");
  }
  int64_t pos = 0, neg = 0;
  for (int l : labels) {
    if (l == 1) {
      ++pos;
    } else if (l == 0) {
      ++neg;
    } else {
      throw MetricError("roc_auc: labels must be 0 or 1, got " + std::to_string(l));
    }
  }
  if (pos == 0 || neg == 0) {
    throw MetricError("roc_auc: needs both classes present");
  }
  double wins = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / (double(pos) * double(neg));
}

double macro_auc(const std::vector<std::vector<double>>& class_scores,
                 const std::vector<int>& labels, int num_classes) {
  if (int(class_scores.size()) != num_classes) {
    throw MetricError("macro_auc: expected one score vector per class");
  }
  double total = 0;
  int counted = 0;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<int> binary(labels.size());
    int64_t pos = 0;
    for (size_t i = 0; i < labels.size(); ++i) {
      binary[i] = labels[i] == c ? 1 : 0;
      pos += binary[i];
    }
    if (pos == 0 || pos == int64_t(labels.size())) continue;  // class absent either way
    total += roc_auc(class_scores[size_t(c)], binary);
    ++counted;
  }
  if (counted == 0) throw MetricError("macro_auc: no class has both members and non-members");
  return total / double(counted);
}

double weighted_f1(const std::vector<int>& predictions,
                   const std::vector<int>& labels, int num_classes) {
  if (predictions.size() != labels.size()) {
    throw MetricError("weighted_f1: " + std::to_string(predictions.size()) +
                      " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw MetricError("weighted_f1: empty input");
  std::vector<int64_t> tp(size_t(num_classes), 0), fp(size_t(num_classes), 0),
      fn(size_t(num_classes), 0), support(size_t(num_classes), 0);
  for (size_t i = 0; i < labels.size(); ++i) {
    int l = labels[i], p = predictions[i];
    if (l < 0 || l >= num_classes || p < 0 || p >= num_classes) {
      throw MetricError("weighted_f1: class index out of range");
    }
    support[size_t(l)] += 1;
    if (p == l) {
      tp[size_t(l)] += 1;
    } else {
      fp[size_t(p)] += 1;
      fn[size_t(l)] += 1;
    }
  }
  double acc = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (support[size_t(c)] == 0) continue;  // absent class carries no weight
    double denom_p = double(tp[size_t(c)] + fp[size_t(c)]);
    double denom_r = double(tp[size_t(c)] + fn[size_t(c)]);
    double precision = denom_p > 0 ? double(tp[size_t(c)]) / denom_p : 0.0;
    double recall = denom_r > 0 ? double(tp[size_t(c)]) / denom_r : 0.0;
    double f1 = (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    acc += f1 * double(support[size_t(c)]) / double(labels.size());
  }
  return acc;
}

}  // namespace drsl
