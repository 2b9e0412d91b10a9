#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "provgraph/hetgraph.hpp"

namespace provgraph {

// Binary classification scores with ATTACK as the positive class.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  // Set when nothing was predicted positive; precision is then reported as 0.
  bool precision_undefined = false;

  std::size_t support_attack() const { return tp + fn; }
  std::size_t support_benign() const { return fp + tn; }
  bool operator==(const Metrics&) const = default;
};

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

// Throws DimensionMismatch when the spans differ in length.
Metrics compute_metrics(std::span<const GraphLabel> predicted, std::span<const GraphLabel> truth);

nlohmann::json to_json(const Metrics& m);
Metrics metrics_from_json(const nlohmann::json& j);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  bool operator==(const MeanStd&) const = default;
};

MeanStd mean_std(std::span<const double> values);

struct CrossValidationSummary {
  std::string name;  // dataset label, e.g. the attack vector
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<Metrics> folds;
  MeanStd precision;
  MeanStd recall;
  MeanStd f1;
  // Settings the run used (training arguments), reproduced verbatim.
  nlohmann::json config = nlohmann::json::object();

  bool operator==(const CrossValidationSummary&) const = default;
};

// Fills the aggregates from `folds`.
CrossValidationSummary summarize(std::string name, std::size_t k, std::uint64_t seed,
                                 std::vector<Metrics> folds, nlohmann::json config = {});

nlohmann::json to_json(const CrossValidationSummary& s);
CrossValidationSummary summary_from_json(const nlohmann::json& j);

}  // namespace provgraph
