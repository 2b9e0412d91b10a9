#include "provgraph/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "provgraph/checkpoint.hpp"
#include "provgraph/error.hpp"
#include "provgraph/rng.hpp"
#include "provgraph/synth.hpp"

namespace provgraph {

void TrainingArguments::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be nonnegative");
  if (hidden_dim < 1 || num_layers < 1) throw InvalidArgument("hidden_dim and num_layers must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
  if (early_stopping_patience && *early_stopping_patience < 1) {
    throw InvalidArgument("early_stopping_patience must be at least 1");
  }
  if (eval_every < 1) throw InvalidArgument("eval_every must be at least 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InvalidArgument("validation_fraction must lie in [0, 1)");
  }
}

ModelConfig TrainingArguments::model_config() const {
  ModelConfig c;
  c.hidden_dim = hidden_dim;
  c.num_layers = num_layers;
  c.aggregation = aggregation;
  c.readout = readout;
  c.dropout_rate = dropout;
  return c;
}

nlohmann::json to_json(const TrainingArguments& a) {
  nlohmann::json j{{"epochs", a.epochs},
                   {"learning_rate", a.learning_rate},
                   {"weight_decay", a.weight_decay},
                   {"aggregation", to_string(a.aggregation)},
                   {"readout", to_string(a.readout)},
                   {"hidden_dim", a.hidden_dim},
                   {"num_layers", a.num_layers},
                   {"dropout", a.dropout},
                   {"early_stopping_patience", nullptr},
                   {"checkpoint_dir", nullptr},
                   {"eval_every", a.eval_every},
                   {"seed", a.seed},
                   {"batch_size", a.batch_size},
                   {"validation_fraction", a.validation_fraction},
                   {"load_best_model_at_end", a.load_best_model_at_end},
                   {"features", to_json(a.features)}};
  if (a.early_stopping_patience) j["early_stopping_patience"] = *a.early_stopping_patience;
  if (a.checkpoint_dir) j["checkpoint_dir"] = a.checkpoint_dir->generic_string();
  return j;
}

TrainingArguments training_arguments_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{
      "epochs",     "learning_rate", "weight_decay",        "aggregation",
      "readout",    "hidden_dim",    "num_layers",          "dropout",
      "early_stopping_patience",     "checkpoint_dir",      "eval_every",
      "seed",       "batch_size",    "validation_fraction", "load_best_model_at_end",
      "features"};
  if (!j.is_object()) throw InvalidArgument("training arguments must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw InvalidArgument("unknown training argument '" + key + "'");
  }
  TrainingArguments a;
  try {
    a.epochs = j.value("epochs", a.epochs);
    a.learning_rate = j.value("learning_rate", a.learning_rate);
    a.weight_decay = j.value("weight_decay", a.weight_decay);
    if (j.contains("aggregation")) a.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
    if (j.contains("readout")) a.readout = parse_readout(j.at("readout").get<std::string>());
    a.hidden_dim = j.value("hidden_dim", a.hidden_dim);
    a.num_layers = j.value("num_layers", a.num_layers);
    a.dropout = j.value("dropout", a.dropout);
    if (j.contains("early_stopping_patience") && !j.at("early_stopping_patience").is_null()) {
      a.early_stopping_patience = j.at("early_stopping_patience").get<std::size_t>();
    }
    if (j.contains("checkpoint_dir") && !j.at("checkpoint_dir").is_null()) {
      a.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
    }
    a.eval_every = j.value("eval_every", a.eval_every);
    a.seed = j.value("seed", a.seed);
    a.batch_size = j.value("batch_size", a.batch_size);
    a.validation_fraction = j.value("validation_fraction", a.validation_fraction);
    a.load_best_model_at_end = j.value("load_best_model_at_end", a.load_best_model_at_end);
    if (j.contains("features")) a.features = feature_options_from_json(j.at("features"));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("training arguments: ") + e.what());
  }
  a.validate();
  return a;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kEpochEnd: return "EPOCH_END";
    case EventKind::kLog: return "LOG";
    case EventKind::kCheckpointSaved: return "CHECKPOINT_SAVED";
    case EventKind::kEarlyStop: return "EARLY_STOP";
    case EventKind::kTrainEnd: return "TRAIN_END";
  }
  return "LOG";
}

nlohmann::json to_json(const TrainingHistory& h) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : h.epochs) {
    nlohmann::json row{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation", nullptr}};
    if (e.validation) row["validation"] = to_json(*e.validation);
    epochs.push_back(std::move(row));
  }
  nlohmann::json j{{"epochs", std::move(epochs)},
                   {"best_epoch", nullptr},
                   {"best_f1", h.best_f1},
                   {"early_stopped", h.early_stopped}};
  if (h.best_epoch) j["best_epoch"] = *h.best_epoch;
  return j;
}

namespace {

void emit(std::span<const Callback> callbacks, const CallbackEvent& event) {
  for (const auto& cb : callbacks) {
    if (cb) cb(event);
  }
}

GraphLabel label_of(const PreparedGraph& pg) {
  if (!pg.label) throw InvalidArgument("training and evaluation graphs must be labelled");
  return *pg.label;
}

// Seed streams below args.seed; fixed so that runs are reproducible.
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kDropoutStream = 2;

}  // namespace

std::vector<GraphLabel> predict(const RGCNModel& model, std::span<const PreparedGraph> graphs) {
  std::vector<GraphLabel> out;
  out.reserve(graphs.size());
  for (const auto& pg : graphs) {
    const Eigen::Vector2d logits = forward(model, pg, false, 0).logits;
    out.push_back(logits(1) > logits(0) ? GraphLabel::kAttack : GraphLabel::kBenign);
  }
  return out;
}

Metrics evaluate(const RGCNModel& model, std::span<const PreparedGraph> test_set) {
  std::vector<GraphLabel> truth;
  truth.reserve(test_set.size());
  for (const auto& pg : test_set) truth.push_back(label_of(pg));
  return compute_metrics(predict(model, test_set), truth);
}

TrainResult train(const TrainingArguments& args, RGCNModel model,
                  std::span<const PreparedGraph> train_set,
                  std::span<const PreparedGraph> validation_set,
                  std::span<const Callback> callbacks) {
  args.validate();
  if (train_set.empty()) throw InvalidArgument("training set is empty");
  for (const auto& pg : train_set) label_of(pg);
  for (const auto& pg : validation_set) label_of(pg);

  TrainResult result;
  TrainingHistory& history = result.history;
  AdamState adam = init_adam(model);
  AdamOptions opt;
  opt.learning_rate = args.learning_rate;
  opt.weight_decay = args.weight_decay;

  std::optional<Parameters> best_params;
  std::size_t stale_evals = 0;
  const auto shuffle_seed = derive_seed(args.seed, kShuffleStream);
  const auto dropout_seed = derive_seed(args.seed, kDropoutStream);
  std::vector<std::size_t> order(train_set.size());

  auto save = [&](const RGCNModel& m, const char* file, std::size_t epoch) {
    if (!args.checkpoint_dir) return;
    const auto path = *args.checkpoint_dir / file;
    save_checkpoint(m, path);
    CallbackEvent ev;
    ev.kind = EventKind::kCheckpointSaved;
    ev.epoch = epoch;
    ev.checkpoint = path;
    ev.message = "saved " + path.generic_string();
    emit(callbacks, ev);
  };

  std::size_t epoch = 0;
  try {
    for (epoch = 1; epoch <= args.epochs; ++epoch) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(derive_seed(shuffle_seed, epoch));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.uniform_index(i)]);
      }
      const std::uint64_t epoch_dropout = derive_seed(dropout_seed, epoch);

      double loss_sum = 0.0;
      for (std::size_t start = 0; start < order.size(); start += args.batch_size) {
        const std::size_t end = std::min(order.size(), start + args.batch_size);
        GradientTape batch = model.params.zeros_like();
        for (std::size_t p = start; p < end; ++p) {
          const PreparedGraph& pg = train_set[order[p]];
          loss_sum += accumulate_gradient(model, pg, label_of(pg), true,
                                          derive_seed(epoch_dropout, p), batch);
        }
        const double inv = 1.0 / static_cast<double>(end - start);
        for (auto& t : batch.tensors()) t *= inv;
        adam_step(model, batch, opt, adam);
      }
      if (!model.params.all_finite()) throw NonFiniteLoss("parameters diverged");

      EpochRecord record;
      record.epoch = epoch;
      record.train_loss = loss_sum / static_cast<double>(order.size());
      const bool evaluate_now =
          !validation_set.empty() && (epoch % args.eval_every == 0 || epoch == args.epochs);
      bool stop = false;
      if (evaluate_now) {
        record.validation = evaluate(model, validation_set);
      }
      history.epochs.push_back(record);

      CallbackEvent ev;
      ev.kind = EventKind::kEpochEnd;
      ev.epoch = epoch;
      ev.train_loss = record.train_loss;
      ev.validation = record.validation;
      emit(callbacks, ev);

      CallbackEvent log;
      log.kind = EventKind::kLog;
      log.epoch = epoch;
      log.train_loss = record.train_loss;
      log.validation = record.validation;
      char buf[128];
      if (record.validation) {
        std::snprintf(buf, sizeof(buf), "epoch %zu loss %.6f val_f1 %.4f", epoch, record.train_loss,
                      record.validation->f1);
      } else {
        std::snprintf(buf, sizeof(buf), "epoch %zu loss %.6f", epoch, record.train_loss);
      }
      log.message = buf;
      emit(callbacks, log);

      if (evaluate_now) {
        if (!history.best_epoch || record.validation->f1 > history.best_f1) {
          history.best_epoch = epoch;
          history.best_f1 = record.validation->f1;
          stale_evals = 0;
          if (args.load_best_model_at_end) best_params = model.params;
          save(model, "best.ckpt", epoch);
        } else {
          ++stale_evals;
          if (args.early_stopping_patience && stale_evals >= *args.early_stopping_patience) {
            history.early_stopped = true;
            CallbackEvent es;
            es.kind = EventKind::kEarlyStop;
            es.epoch = epoch;
            es.validation = record.validation;
            es.message = "no validation improvement for " + std::to_string(stale_evals) +
                         " evaluations";
            emit(callbacks, es);
            stop = true;
          }
        }
      }
      if (stop) break;
    }
  } catch (const NonFiniteLoss& e) {
    CallbackEvent end;
    end.kind = EventKind::kTrainEnd;
    end.epoch = std::min(epoch, args.epochs);
    end.failed = true;
    end.message = e.what();
    emit(callbacks, end);
    throw;
  }

  const std::size_t last_epoch = history.epochs.empty() ? 0 : history.epochs.back().epoch;
  save(model, "last.ckpt", last_epoch);
  if (args.load_best_model_at_end && best_params) model.params = std::move(*best_params);

  CallbackEvent end;
  end.kind = EventKind::kTrainEnd;
  end.epoch = last_epoch;
  if (!history.epochs.empty()) end.train_loss = history.epochs.back().train_loss;
  end.message = "training finished after " + std::to_string(last_epoch) + " epochs";
  emit(callbacks, end);

  result.model = std::move(model);
  return result;
}

std::vector<Fold> kfold_split(std::span<const GraphLabel> labels, std::size_t k,
                              std::uint64_t seed) {
  if (k < 2) throw InvalidFoldCount("k must be at least 2, got " + std::to_string(k));
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i] == GraphLabel::kAttack ? 1 : 0].push_back(i);
  }
  for (const auto& members : by_class) {
    if (members.size() < k) {
      throw InvalidFoldCount("each class needs at least k=" + std::to_string(k) +
                             " members, found " + std::to_string(members.size()));
    }
  }
  Rng rng(seed);
  std::vector<Fold> folds(k);
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.uniform_index(i)]);
    }
    for (std::size_t j = 0; j < members.size(); ++j) folds[j % k].test.push_back(members[j]);
  }
  for (auto& fold : folds) {
    std::sort(fold.test.begin(), fold.test.end());
    std::vector<bool> in_test(labels.size(), false);
    for (auto i : fold.test) in_test[i] = true;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!in_test[i]) fold.train.push_back(i);
    }
  }
  return folds;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const std::size_t> indices, std::span<const GraphLabel> labels, double fraction,
    std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (auto i : indices) by_class[labels[i] == GraphLabel::kAttack ? 1 : 0].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> train, validation;
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.uniform_index(i)]);
    }
    std::size_t n_val = 0;
    if (fraction > 0.0 && members.size() >= 2) {
      n_val = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size()))));
      n_val = std::min(n_val, members.size() - 1);
    }
    validation.insert(validation.end(), members.begin(),
                      members.begin() + static_cast<std::ptrdiff_t>(n_val));
    train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
  return {std::move(train), std::move(validation)};
}

FeaturizedDataset featurize(std::span<const HeteroMultigraph> graphs,
                            const FeatureOptions& options) {
  FeaturizedDataset out;
  out.schema = relation_schema(graphs);
  out.columns = feature_columns(out.schema, options);
  out.features.reserve(graphs.size());
  for (const auto& g : graphs) out.features.push_back(node_features(g, out.schema, options));
  return out;
}

CrossValidationSummary cross_validate(const TrainingArguments& args,
                                      std::span<const HeteroMultigraph> graphs, std::size_t k,
                                      std::uint64_t seed, std::span<const Callback> callbacks,
                                      std::string name) {
  args.validate();
  std::vector<GraphLabel> labels;
  labels.reserve(graphs.size());
  for (const auto& g : graphs) {
    if (!g.label()) throw InvalidArgument("cross-validation needs labelled graphs");
    labels.push_back(*g.label());
  }
  const std::vector<Fold> folds = kfold_split(labels, k, seed);
  if (name.empty() && !graphs.empty() && graphs.front().scenario()) name = *graphs.front().scenario();

  const FeaturizedDataset data = featurize(graphs, args.features);
  const ModelConfig config = args.model_config();
  RGCNModel shape = init_model(data.schema, data.columns.size(), config, 0);
  shape.feature_columns = data.columns;
  std::vector<PreparedGraph> prepared;
  prepared.reserve(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    prepared.push_back(prepare_graph(shape, graphs[i], data.features[i]));
  }

  std::vector<Metrics> results;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    auto [train_idx, val_idx] =
        stratified_holdout(folds[f].train, labels, args.validation_fraction, derive_seed(seed, f));
    auto gather = [&](const std::vector<std::size_t>& idx) {
      std::vector<PreparedGraph> out;
      out.reserve(idx.size());
      for (auto i : idx) out.push_back(prepared[i]);
      return out;
    };
    const auto train_set = gather(train_idx);
    const auto val_set = gather(val_idx);
    const auto test_set = gather(folds[f].test);

    TrainingArguments fold_args = args;
    fold_args.seed = derive_seed(args.seed, f);
    if (args.checkpoint_dir) fold_args.checkpoint_dir = *args.checkpoint_dir / ("fold" + std::to_string(f));
    RGCNModel model = init_model(data.schema, data.columns.size(), config, fold_args.seed);
    model.feature_columns = data.columns;
    model.metadata = {{"features", to_json(args.features)}};
    TrainResult trained = train(fold_args, std::move(model), train_set, val_set, callbacks);
    results.push_back(evaluate(trained.model, test_set));
  }
  nlohmann::json config_json = to_json(args);
  config_json.erase("checkpoint_dir");
  return summarize(std::move(name), k, seed, std::move(results), std::move(config_json));
}

}  // namespace provgraph
