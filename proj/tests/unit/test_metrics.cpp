#include <cmath>

#include "lgcn/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lgcn;
using ad::Tensor;

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = i;
  return m;
}

std::vector<std::size_t> random_mask(CounterRng& rng, std::size_t n) {
  std::vector<std::size_t> m;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(0.7)) m.push_back(i);
  }
  if (m.empty()) m.push_back(rng.below(n));
  return m;
}

// Coarse values make ties common.
double random_score(CounterRng& rng, bool coarse) {
  return coarse ? static_cast<double>(rng.below(4)) / 3.0 : rng.uniform();
}

}  // namespace

TEST(Auc, Example) {
  const std::vector<int> labels{1, 0, 1, 0};
  const std::vector<double> scores{0.9, 0.8, 0.7, 0.1};
  EXPECT_DOUBLE_EQ(auc(scores, labels, all_rows(4)), 0.75);
}

TEST(Auc, AllTiesGiveHalf) {
  const std::vector<int> labels{1, 0, 0, 1, 0};
  const std::vector<double> scores(5, 0.3);
  EXPECT_EQ(auc(scores, labels, all_rows(5)), 0.5);
}

TEST(Auc, PerfectSeparation) {
  const std::vector<int> labels{0, 0, 1, 1};
  const std::vector<double> scores{0.1, 0.2, 0.8, 0.9};
  EXPECT_EQ(auc(scores, labels, all_rows(4)), 1.0);
}

TEST(Auc, SingleClassMaskIsError) {
  const std::vector<int> labels{1, 1, 0};
  const std::vector<double> scores{0.1, 0.2, 0.3};
  const std::vector<std::size_t> mask{0, 1};
  EXPECT_THROW(auc(scores, labels, mask), std::invalid_argument);
}

TEST(Auc, MatchesPairCountExactly) {
  CounterRng rng(1, "auc");
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    std::vector<int> labels(n);
    std::vector<double> scores(n);
    const bool coarse = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = rng.bernoulli(0.4) ? 1 : 0;
      scores[i] = random_score(rng, coarse);
    }
    labels[0] = 1;
    labels[1] = 0;
    const auto mask = all_rows(n);
    ASSERT_EQ(auc(scores, labels, mask), fixtures::brute_auc(scores, labels, mask)) << "trial " << trial;
  }
}

TEST(Auc, InvariantUnderMonotoneMaps) {
  CounterRng rng(2, "auc-monotone");
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.below(40);
    std::vector<int> labels(n);
    std::vector<double> scores(n), mapped(n);
    const double a = 0.1 + rng.uniform() * 5.0, b = rng.uniform() * 3.0 - 1.5;
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i % 2);
      scores[i] = random_score(rng, trial % 3 == 0);
      mapped[i] = std::exp(a * scores[i]) + b;
    }
    const auto mask = all_rows(n);
    ASSERT_EQ(auc(scores, labels, mask), auc(mapped, labels, mask));
  }
}

TEST(Auc, ComplementSumsToOne) {
  CounterRng rng(3, "auc-complement");
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.below(40);
    std::vector<int> labels(n), flipped(n);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i % 2);
      flipped[i] = 1 - labels[i];
      scores[i] = rng.uniform();
    }
    const auto mask = all_rows(n);
    ASSERT_NEAR(auc(scores, labels, mask) + auc(scores, flipped, mask), 1.0, 1e-15);
  }
}

TEST(Accuracy, AllCorrect) {
  const Tensor logits = Tensor::matrix(3, 2, {1, 0, 0, 1, 2, -1});
  const std::vector<int> labels{0, 1, 0};
  EXPECT_EQ(accuracy(logits, labels, all_rows(3)), 1.0);
}

TEST(Accuracy, TieGoesToLowerClass) {
  const Tensor logits = Tensor::matrix(2, 2, {0.5, 0.5, 0.5, 0.5});
  const std::vector<int> labels{0, 1};
  EXPECT_EQ(accuracy(logits, labels, all_rows(2)), 0.5);
}

TEST(Accuracy, MajorityPredictionOnImbalancedData) {
  const std::size_t n = 1000;
  Tensor logits({n, 2});
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    logits.at(i, 0) = 1.0;
    if (i % 10 == 0) labels[i] = 1;
  }
  EXPECT_DOUBLE_EQ(accuracy(logits, labels, all_rows(n)), 0.9);
}

TEST(Accuracy, RandomLogitsNearHalf) {
  CounterRng rng(4, "accuracy-random");
  const std::size_t n = 4000;
  const Tensor logits = fixtures::random_tensor({n, 2}, rng);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
  EXPECT_NEAR(accuracy(logits, labels, all_rows(n)), 0.5, 3.0 * std::sqrt(0.25 / n));
}

TEST(Accuracy, EmptyMaskIsError) {
  const std::vector<int> labels{0};
  EXPECT_THROW(accuracy(Tensor::matrix(1, 2, {0, 1}), labels, {}), std::invalid_argument);
}

TEST(Accuracy, MatchesBruteForceExactly) {
  CounterRng rng(5, "accuracy");
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(30), c = 2 + rng.below(3);
    Tensor logits({n, c});
    for (double& v : logits.values()) v = random_score(rng, trial % 2 == 0);
    std::vector<int> labels(n);
    for (int& y : labels) y = static_cast<int>(rng.below(c));
    const auto mask = random_mask(rng, n);
    ASSERT_EQ(accuracy(logits, labels, mask), fixtures::brute_accuracy(logits, labels, mask)) << "trial " << trial;
  }
}

TEST(MacroF1, Examples) {
  const std::vector<int> labels{0, 0, 1};
  EXPECT_EQ(macro_f1(std::vector<int>{0, 0, 1}, labels, all_rows(3), 2), 1.0);
  EXPECT_NEAR(macro_f1(std::vector<int>{0, 1, 1}, labels, all_rows(3), 2), 2.0 / 3.0, 1e-15);
}

TEST(MacroF1, SingleClassPredictionAveragesWithZero) {
  const std::vector<int> labels{0, 0, 0, 1};
  const std::vector<int> preds{0, 0, 0, 0};
  // majority F1 = 2 * 3 / (4 + 3)
  EXPECT_DOUBLE_EQ(macro_f1(preds, labels, all_rows(4), 2), (6.0 / 7.0) / 2.0);
}

TEST(MacroF1, AbsentClassScoresZero) {
  const std::vector<int> labels{0, 1};
  EXPECT_DOUBLE_EQ(macro_f1(labels, labels, all_rows(2), 3), 2.0 / 3.0);
}

TEST(MacroF1, MatchesBruteForceExactly) {
  CounterRng rng(6, "macro-f1");
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(30), c = 2 + rng.below(3);
    std::vector<int> labels(n), preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(rng.below(c));
      preds[i] = rng.bernoulli(0.5) ? labels[i] : static_cast<int>(rng.below(c));
    }
    const auto mask = random_mask(rng, n);
    const double fast = macro_f1(preds, labels, mask, c);
    ASSERT_EQ(fast, fixtures::brute_macro_f1(preds, labels, mask, c)) << "trial " << trial;
    ASSERT_NEAR(fast, fixtures::precision_recall_macro_f1(preds, labels, mask, c), 1e-15);
  }
}

TEST(MeanSe, ClosedForm) {
  const std::vector<double> v{0.9, 1.1};
  const MeanSe r = mean_se(v);
  EXPECT_DOUBLE_EQ(r.mean, 1.0);
  EXPECT_NEAR(r.se, 0.1, 1e-15);
}

TEST(MeanSe, IdenticalValuesHaveZeroError) {
  const std::vector<double> v(10, 0.731);
  EXPECT_EQ(mean_se(v).se, 0.0);
}

TEST(ClassProbabilities, StableAndNormalized) {
  const Tensor logits = Tensor::matrix(2, 2, {1000, 0, -3, 5});
  const auto p = class_probabilities(logits, 1);
  EXPECT_EQ(p[0], 0.0);
  EXPECT_NEAR(p[1], 1.0 / (1.0 + std::exp(-8.0)), 1e-15);
}
