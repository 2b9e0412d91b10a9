#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "provgraph/features.hpp"
#include "provgraph/metrics.hpp"
#include "provgraph/rgcn.hpp"

namespace provgraph {

struct TrainingArguments {
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  double weight_decay = 0.005;
  Aggregation aggregation = Aggregation::kSum;
  Readout readout = Readout::kSumPool;
  std::size_t hidden_dim = 256;
  std::size_t num_layers = 2;
  double dropout = 0.5;
  std::optional<std::size_t> early_stopping_patience;
  std::optional<std::filesystem::path> checkpoint_dir;
  std::size_t eval_every = 1;
  std::uint64_t seed = 0;
  std::size_t batch_size = 8;
  // Fraction of each training fold held out for validation.
  double validation_fraction = 0.1;
  // Replace the final weights with the best validation checkpoint.
  bool load_best_model_at_end = false;
  FeatureOptions features;

  // Throws InvalidArgument.
  void validate() const;
  ModelConfig model_config() const;
};

// Field names mirror the struct; "features" holds the FeatureOptions JSON.
// Unknown keys are rejected with InvalidArgument so that typos in run
// configurations do not pass silently.
nlohmann::json to_json(const TrainingArguments& args);
TrainingArguments training_arguments_from_json(const nlohmann::json& j);

enum class EventKind { kEpochEnd, kLog, kCheckpointSaved, kEarlyStop, kTrainEnd };

std::string_view to_string(EventKind kind);

struct CallbackEvent {
  EventKind kind = EventKind::kLog;
  std::size_t epoch = 0;  // 1-based; 0 before the first epoch
  std::optional<double> train_loss;
  std::optional<Metrics> validation;
  std::optional<std::filesystem::path> checkpoint;
  std::string message;
  bool failed = false;
};

using Callback = std::function<void(const CallbackEvent&)>;

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<Metrics> validation;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> best_epoch;
  double best_f1 = 0.0;
  bool early_stopped = false;
  bool operator==(const TrainingHistory&) const = default;
};

nlohmann::json to_json(const TrainingHistory& h);

struct TrainResult {
  RGCNModel model;
  TrainingHistory history;
};

// Every graph of both sets must carry a label. Throws NonFiniteLoss after
// delivering a failed TRAIN_END event.
TrainResult train(const TrainingArguments& args, RGCNModel model,
                  std::span<const PreparedGraph> train_set,
                  std::span<const PreparedGraph> validation_set,
                  std::span<const Callback> callbacks = {});

// Argmax of the logits; ties go to BENIGN.
std::vector<GraphLabel> predict(const RGCNModel& model, std::span<const PreparedGraph> graphs);
Metrics evaluate(const RGCNModel& model, std::span<const PreparedGraph> test_set);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified: each class is shuffled with the seed and dealt round-robin
// onto the k test folds. Throws InvalidFoldCount when k < 2 or a class has
// fewer than k members.
std::vector<Fold> kfold_split(std::span<const GraphLabel> labels, std::size_t k,
                              std::uint64_t seed);

// Stratified split of `indices` into (train, validation); each class with at
// least two members contributes max(1, round(fraction * size)) graphs to
// validation.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const std::size_t> indices, std::span<const GraphLabel> labels, double fraction,
    std::uint64_t seed);

// Features for every graph over the dataset-wide relation schema.
struct FeaturizedDataset {
  std::vector<CanonicalRelation> schema;
  std::vector<std::string> columns;
  std::vector<FeatureSet> features;
};

FeaturizedDataset featurize(std::span<const HeteroMultigraph> graphs, const FeatureOptions& options);

// k-fold cross-validation: for fold f the held-out fold is the test set, the
// remainder is split into train/validation by stratified_holdout, and a
// fresh model is trained. Model initialisation and training use seeds
// derived from args.seed and f; the fold assignment uses `seed`.
// Checkpoints go to `<checkpoint_dir>/fold<f>/`.
CrossValidationSummary cross_validate(const TrainingArguments& args,
                                      std::span<const HeteroMultigraph> graphs, std::size_t k,
                                      std::uint64_t seed, std::span<const Callback> callbacks = {},
                                      std::string name = {});

}  // namespace provgraph
