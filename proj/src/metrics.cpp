#include "lgcn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lgcn {

namespace {

void check_mask(std::span<const std::size_t> mask, std::size_t n, const char* what) {
  if (mask.empty()) throw std::invalid_argument(std::string(what) + ": mask is empty");
  for (auto i : mask) {
    if (i >= n) throw std::out_of_range(std::string(what) + ": mask index " + std::to_string(i) + " out of range");
  }
}

}  // namespace

std::vector<int> argmax_rows(const ad::Tensor& logits) {
  const std::size_t n = logits.rows(), c = logits.cols();
  std::vector<int> out(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.data() + i * c;
    std::size_t best = 0;
    for (std::size_t k = 1; k < c; ++k) {
      if (z[k] > z[best]) best = k;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<double> class_probabilities(const ad::Tensor& logits, int positive) {
  const std::size_t n = logits.rows(), c = logits.cols();
  if (positive < 0 || static_cast<std::size_t>(positive) >= c) throw std::out_of_range("class id out of range");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.data() + i * c;
    const double top = *std::max_element(z, z + c);
    double denom = 0.0;
    for (std::size_t k = 0; k < c; ++k) denom += std::exp(z[k] - top);
    out[i] = std::exp(z[positive] - top) / denom;
  }
  return out;
}

double accuracy(const ad::Tensor& logits, std::span<const int> labels, std::span<const std::size_t> mask) {
  check_mask(mask, labels.size(), "accuracy");
  if (logits.rows() != labels.size()) throw std::invalid_argument("accuracy: need one label per logit row");
  const auto pred = argmax_rows(logits);
  std::size_t hits = 0;
  for (auto i : mask) hits += pred[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

double auc(std::span<const double> scores, std::span<const int> labels, std::span<const std::size_t> mask,
           int positive) {
  check_mask(mask, labels.size(), "auc");
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: need one score per label");
  std::vector<std::size_t> order(mask.begin(), mask.end());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share their average.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t q = i; q < j; ++q) {
      if (labels[order[q]] == positive) {
        rank_sum += avg;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = order.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc: mask must contain both classes");
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels, std::span<const std::size_t> mask,
                std::size_t classes) {
  check_mask(mask, labels.size(), "macro_f1");
  if (predictions.size() != labels.size()) throw std::invalid_argument("macro_f1: need one prediction per label");
  if (classes == 0) throw std::invalid_argument("macro_f1: no classes");
  std::vector<std::size_t> tp(classes, 0), pred(classes, 0), actual(classes, 0);
  for (auto i : mask) {
    const auto p = static_cast<std::size_t>(predictions[i]);
    const auto y = static_cast<std::size_t>(labels[i]);
    if (p >= classes || y >= classes) throw std::out_of_range("macro_f1: class id out of range");
    ++pred[p];
    ++actual[y];
    if (p == y) ++tp[p];
  }
  double total = 0.0;
  for (std::size_t k = 0; k < classes; ++k) {
    // 2PR / (P + R) simplifies to 2TP / (predicted + actual).
    const std::size_t denom = pred[k] + actual[k];
    if (denom > 0) total += 2.0 * static_cast<double>(tp[k]) / static_cast<double>(denom);
  }
  return total / static_cast<double>(classes);
}

double macro_f1(const ad::Tensor& logits, std::span<const int> labels, std::span<const std::size_t> mask,
                std::size_t classes) {
  if (logits.rows() != labels.size()) throw std::invalid_argument("macro_f1: need one label per logit row");
  const auto pred = argmax_rows(logits);
  return macro_f1(pred, labels, mask, classes);
}

MeanSe mean_se(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_se: no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    return {values.front(), 0.0};
  }
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

}  // namespace lgcn
