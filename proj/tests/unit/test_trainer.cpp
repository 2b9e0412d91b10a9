#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "provgraph/error.hpp"
#include "provgraph/synth.hpp"
#include "provgraph/trainer.hpp"

namespace provgraph {
namespace {

std::vector<GraphLabel> balanced_labels(std::size_t per_class) {
  std::vector<GraphLabel> labels(per_class, GraphLabel::kBenign);
  labels.insert(labels.end(), per_class, GraphLabel::kAttack);
  return labels;
}

TrainingArguments quick_args() {
  TrainingArguments a;
  a.epochs = 3;
  a.hidden_dim = 8;
  a.batch_size = 4;
  a.learning_rate = 0.01;
  a.seed = 3;
  a.features.mode = FeatureMode::kDegree;
  return a;
}

struct Prepared {
  RGCNModel model;
  std::vector<PreparedGraph> graphs;
};

Prepared prepare(const TrainingArguments& args, std::span<const HeteroMultigraph> graphs) {
  const auto fd = featurize(graphs, args.features);
  Prepared p{init_model(fd.schema, fd.columns.size(), args.model_config(), args.seed), {}};
  p.model.feature_columns = fd.columns;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    p.graphs.push_back(prepare_graph(p.model, graphs[i], fd.features[i]));
  return p;
}

TEST(KFold, StratifiedPartition) {
  const auto labels = balanced_labels(100);
  const auto folds = kfold_split(labels, 5, 1);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::size_t> tested;
  for (const auto& f : folds) {
    ASSERT_EQ(f.test.size(), 40u);
    EXPECT_EQ(f.train.size(), 160u);
    const auto attacks = std::count_if(f.test.begin(), f.test.end(),
                                       [&](std::size_t i) { return labels[i] == GraphLabel::kAttack; });
    EXPECT_EQ(attacks, 20);
    for (std::size_t i : f.test) EXPECT_TRUE(tested.insert(i).second);
    for (std::size_t i : f.train)
      EXPECT_TRUE(std::find(f.test.begin(), f.test.end(), i) == f.test.end());
  }
  EXPECT_EQ(tested.size(), 200u);
  EXPECT_EQ(kfold_split(labels, 5, 1)[2].test, folds[2].test);
  EXPECT_NE(kfold_split(labels, 5, 2)[0].test, folds[0].test);
}

TEST(KFold, InvalidCounts) {
  const auto labels = balanced_labels(3);
  EXPECT_THROW(kfold_split(labels, 1, 1), InvalidFoldCount);
  EXPECT_THROW(kfold_split(labels, 4, 1), InvalidFoldCount);
  EXPECT_NO_THROW(kfold_split(labels, 3, 1));
}

TEST(Holdout, StratifiedFraction) {
  const auto labels = balanced_labels(50);
  std::vector<std::size_t> idx(100);
  for (std::size_t i = 0; i < 100; ++i) idx[i] = i;
  const auto [train, val] = stratified_holdout(idx, labels, 0.1, 4);
  EXPECT_EQ(val.size(), 10u);
  EXPECT_EQ(train.size(), 90u);
  const auto attacks = std::count_if(val.begin(), val.end(),
                                     [&](std::size_t i) { return labels[i] == GraphLabel::kAttack; });
  EXPECT_EQ(attacks, 5);
  const auto [all, none] = stratified_holdout(idx, labels, 0.0, 4);
  EXPECT_TRUE(none.empty());
  EXPECT_EQ(all.size(), 100u);
}

TEST(Arguments, JsonRoundTripAndUnknownKeys) {
  auto a = quick_args();
  a.early_stopping_patience = 2;
  a.aggregation = Aggregation::kMean;
  const auto back = training_arguments_from_json(to_json(a));
  EXPECT_EQ(to_json(back), to_json(a));
  EXPECT_THROW(training_arguments_from_json({{"epoch", 3}}), InvalidArgument);
  EXPECT_THROW(training_arguments_from_json({{"learning_rate", -1.0}}), InvalidArgument);
  EXPECT_EQ(training_arguments_from_json({{"epochs", 7}}).epochs, 7u);
}

TEST(Train, PatienceStopsAfterSecondEvaluation) {
  const auto ds = generate_dataset(AttackVector::kBruteForce, 6, 6, 1, {.scale = 0.002});
  auto args = quick_args();
  args.epochs = 10;
  args.early_stopping_patience = 1;
  auto p = prepare(args, ds.graphs);
  // An all-benign validation set has F1 = 0 whatever the model predicts.
  std::vector<PreparedGraph> val(p.graphs.begin(), p.graphs.begin() + 3);
  std::vector<EventKind> events;
  const std::vector<Callback> cbs{[&](const CallbackEvent& e) { events.push_back(e.kind); }};
  const auto r = train(args, p.model, p.graphs, val, cbs);
  EXPECT_TRUE(r.history.early_stopped);
  EXPECT_EQ(r.history.epochs.size(), 2u);
  EXPECT_EQ(r.history.best_epoch, 1u);
  const std::vector<EventKind> want{EventKind::kEpochEnd, EventKind::kLog, EventKind::kEpochEnd,
                                    EventKind::kLog,      EventKind::kEarlyStop, EventKind::kTrainEnd};
  EXPECT_EQ(events, want);
}

TEST(Train, DeterministicHistoryAndCheckpoints) {
  const auto ds = generate_dataset(AttackVector::kBruteForce, 6, 6, 2, {.scale = 0.002});
  auto args = quick_args();
  const auto dir = std::filesystem::temp_directory_path() / "provgraph_train_test";
  std::filesystem::remove_all(dir);
  args.checkpoint_dir = dir;
  auto p = prepare(args, ds.graphs);
  std::vector<PreparedGraph> val{p.graphs[0], p.graphs[11]};
  std::size_t saved = 0;
  const std::vector<Callback> cbs{[&](const CallbackEvent& e) {
    saved += e.kind == EventKind::kCheckpointSaved;
  }};
  const auto a = train(args, p.model, p.graphs, val, cbs);
  const auto b = train(args, p.model, p.graphs, val);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.model, b.model);
  EXPECT_GE(saved, 2u);
  EXPECT_TRUE(std::filesystem::exists(dir / "last.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "best.ckpt"));
  std::filesystem::remove_all(dir);
}

TEST(Train, LossDecreasesOnSeparableData) {
  const auto ds = generate_dataset(AttackVector::kBruteForce, 8, 8, 3, {.scale = 0.002});
  auto args = quick_args();
  args.epochs = 8;
  args.dropout = 0.0;
  args.features.log_degree = true;
  auto p = prepare(args, ds.graphs);
  const auto r = train(args, p.model, p.graphs, {});
  EXPECT_LT(r.history.epochs.back().train_loss, r.history.epochs.front().train_loss);
  EXPECT_EQ(evaluate(r.model, p.graphs).f1, 1.0);
}

TEST(Train, RequiresLabels) {
  const auto ds = generate_dataset(AttackVector::kBruteForce, 2, 2, 4, {.scale = 0.002});
  auto args = quick_args();
  auto p = prepare(args, ds.graphs);
  p.graphs[1].label.reset();
  EXPECT_ANY_THROW(train(args, p.model, p.graphs, {}));
}

TEST(Predict, TiesGoToBenign) {
  const auto ds = generate_dataset(AttackVector::kBruteForce, 2, 2, 5, {.scale = 0.002});
  auto args = quick_args();
  auto p = prepare(args, ds.graphs);
  for (auto t : p.model.params.tensors()) t.setZero();
  for (auto label : predict(p.model, p.graphs)) EXPECT_EQ(label, GraphLabel::kBenign);
  const auto m = evaluate(p.model, p.graphs);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_TRUE(m.precision_undefined);
}

TEST(CrossValidate, DeterministicSummary) {
  const auto ds = generate_dataset(AttackVector::kBruteForce, 6, 6, 6, {.scale = 0.002});
  auto args = quick_args();
  args.epochs = 2;
  const auto a = cross_validate(args, ds.graphs, 3, 1, {}, "bf");
  const auto b = cross_validate(args, ds.graphs, 3, 1, {}, "bf");
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.folds.size(), 3u);
  EXPECT_EQ(a.name, "bf");
  EXPECT_THROW(cross_validate(args, ds.graphs, 1, 1), InvalidFoldCount);
}

}  // namespace
}  // namespace provgraph
