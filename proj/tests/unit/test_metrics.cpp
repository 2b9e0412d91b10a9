#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "provgraph/error.hpp"
#include "provgraph/metrics.hpp"

namespace provgraph {
namespace {

TEST(Metrics, WorkedExample) {
  const auto m = metrics_from_counts(3, 1, 2, 4);
  EXPECT_DOUBLE_EQ(m.precision, 0.75);
  EXPECT_DOUBLE_EQ(m.recall, 0.6);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.7);
  EXPECT_EQ(m.support_attack(), 5u);
  EXPECT_EQ(m.support_benign(), 5u);
  EXPECT_FALSE(m.precision_undefined);
}

TEST(Metrics, AllNegativeIsZeroNotError) {
  const std::vector<GraphLabel> pred(6, GraphLabel::kBenign);
  const std::vector<GraphLabel> truth{GraphLabel::kAttack, GraphLabel::kBenign, GraphLabel::kAttack,
                                      GraphLabel::kBenign, GraphLabel::kBenign, GraphLabel::kBenign};
  const auto m = compute_metrics(pred, truth);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_TRUE(m.precision_undefined);
}

TEST(Metrics, AgreesWithConfusionOracle) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + gen() % 60;
    const double p_attack = static_cast<double>(gen() % 101) / 100.0;
    std::bernoulli_distribution coin(p_attack);
    std::vector<GraphLabel> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = coin(gen) ? GraphLabel::kAttack : GraphLabel::kBenign;
      truth[i] = coin(gen) ? GraphLabel::kAttack : GraphLabel::kBenign;
    }
    const auto got = compute_metrics(pred, truth);
    const auto want = testing::confusion_oracle(pred, truth);
    ASSERT_EQ(got.tp, want.tp);
    ASSERT_EQ(got.fp, want.fp);
    ASSERT_EQ(got.fn, want.fn);
    ASSERT_EQ(got.tn, want.tn);
    ASSERT_NEAR(got.precision, want.precision, 1e-12);
    ASSERT_NEAR(got.recall, want.recall, 1e-12);
    ASSERT_NEAR(got.f1, want.f1, 1e-12);
  }
}

TEST(Metrics, LengthMismatch) {
  const std::vector<GraphLabel> a(3, GraphLabel::kBenign), b(2, GraphLabel::kBenign);
  EXPECT_THROW(compute_metrics(a, b), DimensionMismatch);
}

TEST(Metrics, EmptyInput) {
  const auto m = compute_metrics({}, {});
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_EQ(m.accuracy, 0.0);
}

TEST(MeanStd, PopulationStd) {
  const std::vector<double> folds{1.0, 0.5};
  const auto s = mean_std(folds);
  EXPECT_DOUBLE_EQ(s.mean, 0.75);
  EXPECT_DOUBLE_EQ(s.std, 0.25);
  const std::vector<double> one{0.3};
  EXPECT_EQ(mean_std(one).std, 0.0);
  EXPECT_EQ(mean_std({}), MeanStd{});
}

TEST(Summary, AggregatesAndJsonRoundTrip) {
  const auto s = summarize("brute-force", 2, 1,
                           {metrics_from_counts(2, 0, 0, 2), metrics_from_counts(1, 1, 1, 1)},
                           {{"epochs", 10}});
  EXPECT_DOUBLE_EQ(s.f1.mean, 0.75);
  EXPECT_DOUBLE_EQ(s.f1.std, 0.25);
  EXPECT_EQ(summary_from_json(to_json(s)), s);
  EXPECT_EQ(metrics_from_json(to_json(s.folds[1])), s.folds[1]);
}

}  // namespace
}  // namespace provgraph
