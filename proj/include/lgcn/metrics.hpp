#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lgcn/tensor.hpp"

namespace lgcn {

/// Row-wise argmax; ties resolve to the lowest class id.
std::vector<int> argmax_rows(const ad::Tensor& logits);

/// Softmax probability of class `positive` for every row.
std::vector<double> class_probabilities(const ad::Tensor& logits, int positive = 1);

/// Fraction of masked rows whose argmax equals the label.
double accuracy(const ad::Tensor& logits, std::span<const int> labels, std::span<const std::size_t> mask);

/// Area under the ROC curve for label == positive, from rank sums with
/// average ranks for ties. Requires both classes in the mask.
double auc(std::span<const double> scores, std::span<const int> labels, std::span<const std::size_t> mask,
           int positive = 1);

/// Unweighted mean of per-class F1; a class never predicted and never
/// present scores 0.
double macro_f1(std::span<const int> predictions, std::span<const int> labels, std::span<const std::size_t> mask,
                std::size_t classes);
double macro_f1(const ad::Tensor& logits, std::span<const int> labels, std::span<const std::size_t> mask,
                std::size_t classes);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error (sample standard deviation / sqrt(n)).
MeanSe mean_se(std::span<const double> values);

}  // namespace lgcn
