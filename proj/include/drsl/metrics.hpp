#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace drsl {

// Mann-Whitney AUC: P(score+ > score-) + 0.5 * P(tie), exact over all pairs.
// labels hold 0/1; both classes must appear.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// one-vs-rest macro average over classes present in the labels
double macro_auc(const std::vector<std::vector<double>>& class_scores,
                 const std::vector<int>& labels, int num_classes);

// per-class F1 weighted by support; F1 = 0 when precision + recall = 0
double weighted_f1(const std::vector<int>& predictions,
                   const std::vector<int>& labels, int num_classes);

struct EvalResult {
  double auc = 0;
  double weighted_f1 = 0;
  std::vector<std::vector<int64_t>> confusion;  // [label][predicted]
  struct PerSlide {
    std::string id;
    int label = 0;
    int predicted = 0;
    double score = 0;  // probability of the positive / predicted class
  };
  std::vector<PerSlide> per_slide;
};

}  // namespace drsl
