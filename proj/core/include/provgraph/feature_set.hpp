#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "provgraph/hetgraph.hpp"

namespace provgraph {

// Dense per-node features, one matrix per node type with rows in the type's
// node order. `schema` names every column ("in:task|Used|file",
// "spectral:3", ...); alignment between graphs goes through these names.
struct FeatureSet {
  std::vector<std::string> schema;
  std::map<std::string, Eigen::MatrixXd> by_type;

  std::size_t dim() const { return schema.size(); }

  // Rows of every type stacked in the graph's global node order.
  Eigen::MatrixXd stacked(const HeteroMultigraph& g) const;

  // Checks row counts against `g` and finiteness of every entry.
  void validate(const HeteroMultigraph& g) const;

  // Reorders columns to `columns`; names absent from this set become zero
  // columns.
  FeatureSet aligned(const std::vector<std::string>& columns) const;

  // Horizontal concatenation; both sets must cover the same types.
  static FeatureSet concat(const FeatureSet& left, const FeatureSet& right);

  bool operator==(const FeatureSet& other) const;
};

// {type: {"schema": [...], "rows": [[...], ...]}}
nlohmann::json to_json(const FeatureSet& features);
FeatureSet feature_set_from_json(const nlohmann::json& j);

}  // namespace provgraph
