#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "provgraph/feature_set.hpp"
#include "provgraph/hetgraph.hpp"
#include "provgraph/lobpcg.hpp"

namespace provgraph {

// Per relation, one "in:<src|edge|dst>" and one "out:<src|edge|dst>" column.
std::vector<std::string> degree_columns(std::span<const CanonicalRelation> relations);
std::vector<std::string> spectral_columns(std::size_t dim);

// (in-degree, out-degree) per canonical relation with multiplicity, in the
// graph's relation order.
FeatureSet degree_features(const HeteroMultigraph& g);
// Same, over an explicit relation schema (relations absent from g give zero
// columns). Used to give every graph of a dataset the same columns.
FeatureSet degree_features(const HeteroMultigraph& g, std::span<const CanonicalRelation> schema);

struct SpectralOptions {
  std::size_t dim = 16;
  double coupling = 1.0;
  double tol = 1e-6;
  int max_iter = 200;
  std::uint64_t seed = 0;
  // Supra-matrices up to this dimension are solved densely.
  std::size_t dense_threshold = 512;
  // Use the per-node coupling preconditioner (see features.cpp).
  bool precondition = true;
  double precondition_shift = 1e-2;
};

struct SpectralEmbedding {
  Eigen::MatrixXd node_embedding;  // num_nodes x dim, global node order
  Eigen::VectorXd eigenvalues;
  bool dense = false;
  bool converged = true;
  int iterations = 0;
};

// Smallest `dim` eigenpairs of the supra-Laplacian over all relations of g;
// a node's embedding is the sum of its entries across layer copies. Each
// eigenvector is signed so that its largest-magnitude entry is positive.
// Throws InvalidArgument when dim exceeds the node count.
SpectralEmbedding spectral_embedding(const HeteroMultigraph& g, const SpectralOptions& options = {});

// Degree features followed by the spectral embedding columns.
FeatureSet spectral_node_features(const HeteroMultigraph& g, const SpectralOptions& options = {});

enum class FeatureMode { kDegree, kSpectral, kCombined };

std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view text);

// Feature pipeline used for training: degree columns over a dataset-wide
// relation schema (log1p-scaled when requested) and/or spectral columns.
// Graphs with fewer nodes than the spectral dimension get zero-padded
// trailing spectral columns.
struct FeatureOptions {
  FeatureMode mode = FeatureMode::kCombined;
  bool log_degree = true;
  SpectralOptions spectral;
};

std::vector<std::string> feature_columns(std::span<const CanonicalRelation> schema,
                                         const FeatureOptions& options);

FeatureSet node_features(const HeteroMultigraph& g, std::span<const CanonicalRelation> schema,
                         const FeatureOptions& options);

nlohmann::json to_json(const FeatureOptions& options);
FeatureOptions feature_options_from_json(const nlohmann::json& j);

}  // namespace provgraph
