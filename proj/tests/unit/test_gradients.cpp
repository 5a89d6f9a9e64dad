#include "gradient_cases.hpp"
#include "lgcn/models.hpp"
#include "support.hpp"

using namespace lgcn;

namespace {

constexpr int kTrials = 100;
constexpr double kTolerance = 1e-4;

class OpGradient : public ::testing::TestWithParam<std::size_t> {};

std::string case_name(const ::testing::TestParamInfo<std::size_t>& info) {
  return fixtures::op_gradient_cases()[info.param].first;
}

}  // namespace

TEST_P(OpGradient, MatchesCentralDifferences) {
  const auto [name, check] = fixtures::op_gradient_cases()[GetParam()];
  CounterRng rng(GetParam(), "grad-trials");
  std::size_t checked = 0, skipped = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const fixtures::GradCheckResult r = check(rng);
    EXPECT_LT(r.max_rel_error, kTolerance) << name << " trial " << trial;
    checked += r.checked;
    skipped += r.skipped;
  }
  EXPECT_GT(checked, 0u);
  EXPECT_LE(skipped * 100, checked) << skipped << " kink coordinates";
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient,
                         ::testing::Range<std::size_t>(0, fixtures::op_gradient_cases().size()), case_name);

TEST(ModelGradient, L4GcnPlusOnTwentyNodes) {
  const Multigraph g = fixtures::random_graph({.vertices = 20, .edges = 45}, 4);
  const SplitMask splits = make_splits(20, {0.5, 0.25, 0.25}, 2);
  ModelSpec spec = ModelSpec::financial(Family::LGCNPlus, 4);
  spec.hidden = 6;
  spec.gamma.kernels = 5;
  Model model(spec, 9);
  const fixtures::GradCheckResult r = fixtures::check_model_gradients(model, g, splits, CounterRng(3, "dropout"));
  EXPECT_LT(r.max_rel_error, kTolerance);
  EXPECT_EQ(r.checked + r.skipped, model.num_parameters());
  EXPECT_LE(r.skipped * 50, r.checked);
}

TEST(ModelGradient, EveryFamilyAtPaperWidths) {
  const Multigraph g = fixtures::random_graph({.vertices = 20, .edges = 40}, 8);
  const SplitMask splits = make_splits(20, {0.5, 0.25, 0.25}, 1);
  for (Family f : {Family::GCN, Family::DVE, Family::LGCN, Family::LGCNPlus}) {
    Model model(ModelSpec::financial(f, 2), 5);
    const fixtures::GradCheckResult r = fixtures::check_model_gradients(model, g, splits, CounterRng(7));
    EXPECT_LT(r.max_rel_error, kTolerance) << to_string(f);
    EXPECT_LE(r.skipped * 50, r.checked) << to_string(f);
  }
}
