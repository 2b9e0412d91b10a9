#include "provgraph/metrics.hpp"

#include <cmath>

#include "provgraph/error.hpp"

namespace provgraph {

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  const auto d = [](std::size_t x) { return static_cast<double>(x); };
  if (tp + fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = d(tp) / d(tp + fp);
  }
  m.recall = tp + fn == 0 ? 0.0 : d(tp) / d(tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0
                                       : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  const std::size_t total = tp + fp + fn + tn;
  m.accuracy = total == 0 ? 0.0 : d(tp + tn) / d(total);
  return m;
}

Metrics compute_metrics(std::span<const GraphLabel> predicted, std::span<const GraphLabel> truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionMismatch(std::to_string(predicted.size()) + " predictions for " +
                            std::to_string(truth.size()) + " labels");
  }
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == GraphLabel::kAttack;
    const bool t = truth[i] == GraphLabel::kAttack;
    if (p && t) ++tp;
    else if (p) ++fp;
    else if (t) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

nlohmann::json to_json(const Metrics& m) {
  return {{"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"accuracy", m.accuracy},
          {"tp", m.tp},
          {"fp", m.fp},
          {"fn", m.fn},
          {"tn", m.tn},
          {"precision_undefined", m.precision_undefined}};
}

Metrics metrics_from_json(const nlohmann::json& j) {
  Metrics m;
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.accuracy = j.at("accuracy").get<double>();
  m.tp = j.at("tp").get<std::size_t>();
  m.fp = j.at("fp").get<std::size_t>();
  m.fn = j.at("fn").get<std::size_t>();
  m.tn = j.at("tn").get<std::size_t>();
  m.precision_undefined = j.at("precision_undefined").get<bool>();
  return m;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(values.size()));
  return out;
}

CrossValidationSummary summarize(std::string name, std::size_t k, std::uint64_t seed,
                                 std::vector<Metrics> folds, nlohmann::json config) {
  CrossValidationSummary s;
  s.name = std::move(name);
  s.k = k;
  s.seed = seed;
  s.config = config.is_null() ? nlohmann::json::object() : std::move(config);
  std::vector<double> p, r, f;
  for (const auto& m : folds) {
    p.push_back(m.precision);
    r.push_back(m.recall);
    f.push_back(m.f1);
  }
  s.precision = mean_std(p);
  s.recall = mean_std(r);
  s.f1 = mean_std(f);
  s.folds = std::move(folds);
  return s;
}

namespace {

nlohmann::json to_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

MeanStd mean_std_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("std").get<double>()};
}

}  // namespace

nlohmann::json to_json(const CrossValidationSummary& s) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& m : s.folds) folds.push_back(to_json(m));
  return {{"name", s.name},
          {"k", s.k},
          {"seed", s.seed},
          {"folds", std::move(folds)},
          {"precision", to_json(s.precision)},
          {"recall", to_json(s.recall)},
          {"f1", to_json(s.f1)},
          {"config", s.config}};
}

CrossValidationSummary summary_from_json(const nlohmann::json& j) {
  try {
    CrossValidationSummary s;
    s.name = j.at("name").get<std::string>();
    s.k = j.at("k").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& f : j.at("folds")) s.folds.push_back(metrics_from_json(f));
    s.precision = mean_std_from_json(j.at("precision"));
    s.recall = mean_std_from_json(j.at("recall"));
    s.f1 = mean_std_from_json(j.at("f1"));
    s.config = j.value("config", nlohmann::json::object());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInput(std::string("summary JSON: ") + e.what());
  }
}

}  // namespace provgraph
