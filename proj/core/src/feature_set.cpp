#include "provgraph/feature_set.hpp"

#include <unordered_map>

#include "provgraph/error.hpp"

namespace provgraph {

Eigen::MatrixXd FeatureSet::stacked(const HeteroMultigraph& g) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(g.num_nodes()), static_cast<Eigen::Index>(dim()));
  Eigen::Index row = 0;
  for (const auto& type : g.node_types()) {
    const auto rows = static_cast<Eigen::Index>(g.nodes(type).size());
    auto it = by_type.find(type);
    if (it == by_type.end() || it->second.rows() != rows || it->second.cols() != out.cols()) {
      throw DimensionMismatch("feature set does not cover node type '" + type + "'");
    }
    out.middleRows(row, rows) = it->second;
    row += rows;
  }
  return out;
}

void FeatureSet::validate(const HeteroMultigraph& g) const {
  for (const auto& type : g.node_types()) {
    auto it = by_type.find(type);
    if (it == by_type.end()) throw DimensionMismatch("no features for node type '" + type + "'");
    if (it->second.rows() != static_cast<Eigen::Index>(g.nodes(type).size()) ||
        it->second.cols() != static_cast<Eigen::Index>(dim())) {
      throw DimensionMismatch("feature matrix for '" + type + "' has wrong shape");
    }
    if (!it->second.allFinite()) {
      throw DimensionMismatch("feature matrix for '" + type + "' has non-finite entries");
    }
  }
}

FeatureSet FeatureSet::aligned(const std::vector<std::string>& columns) const {
  std::unordered_map<std::string, Eigen::Index> position;
  for (std::size_t c = 0; c < schema.size(); ++c) position.emplace(schema[c], static_cast<Eigen::Index>(c));
  FeatureSet out;
  out.schema = columns;
  for (const auto& [type, m] : by_type) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
      auto it = position.find(columns[c]);
      if (it != position.end()) a.col(static_cast<Eigen::Index>(c)) = m.col(it->second);
    }
    out.by_type.emplace(type, std::move(a));
  }
  return out;
}

FeatureSet FeatureSet::concat(const FeatureSet& left, const FeatureSet& right) {
  FeatureSet out;
  out.schema = left.schema;
  out.schema.insert(out.schema.end(), right.schema.begin(), right.schema.end());
  for (const auto& [type, a] : left.by_type) {
    auto it = right.by_type.find(type);
    if (it == right.by_type.end() || it->second.rows() != a.rows()) {
      throw DimensionMismatch("cannot concatenate features for node type '" + type + "'");
    }
    Eigen::MatrixXd m(a.rows(), a.cols() + it->second.cols());
    m << a, it->second;
    out.by_type.emplace(type, std::move(m));
  }
  if (right.by_type.size() != left.by_type.size()) {
    throw DimensionMismatch("feature sets cover different node types");
  }
  return out;
}

bool FeatureSet::operator==(const FeatureSet& other) const {
  if (schema != other.schema || by_type.size() != other.by_type.size()) return false;
  for (const auto& [type, m] : by_type) {
    auto it = other.by_type.find(type);
    if (it == other.by_type.end() || it->second.rows() != m.rows() ||
        it->second.cols() != m.cols() || it->second != m) {
      return false;
    }
  }
  return true;
}

nlohmann::json to_json(const FeatureSet& features) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [type, m] : features.by_type) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    out[type] = {{"schema", features.schema}, {"rows", std::move(rows)}};
  }
  return out;
}

FeatureSet feature_set_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw MalformedInput("feature set JSON must be an object");
  FeatureSet out;
  bool first = true;
  for (const auto& [type, entry] : j.items()) {
    auto schema = entry.at("schema").get<std::vector<std::string>>();
    if (first) {
      out.schema = std::move(schema);
      first = false;
    } else if (schema != out.schema) {
      throw MalformedInput("feature schema differs between node types");
    }
    const auto& rows = entry.at("rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.schema.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != out.schema.size()) throw MalformedInput("feature row has wrong width");
      for (std::size_t c = 0; c < out.schema.size(); ++c) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
      }
    }
    out.by_type.emplace(type, std::move(m));
  }
  return out;
}

}  // namespace provgraph
