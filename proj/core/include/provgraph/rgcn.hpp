#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include "provgraph/feature_set.hpp"
#include "provgraph/hetgraph.hpp"

namespace provgraph {

enum class Aggregation { kSum, kMean };
enum class Readout { kSumPool, kMeanPool };

std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view text);
std::string_view to_string(Readout r);
Readout parse_readout(std::string_view text);

struct RGCNLayer {
  // One in x out matrix per schema relation, in schema order.
  std::vector<Eigen::MatrixXd> relation_weights;
  Eigen::MatrixXd self_weight;

  bool operator==(const RGCNLayer& other) const;
};

// Trainable tensors of a model. Also used for gradients and optimizer
// moments, which mirror the parameter layout exactly.
struct Parameters {
  std::vector<RGCNLayer> layers;
  Eigen::MatrixXd classifier_weight;  // hidden x 2
  Eigen::VectorXd classifier_bias;    // 2

  // Every tensor in a fixed order: per layer the self weight, then the
  // relation weights; then classifier weight and bias.
  std::vector<Eigen::Ref<Eigen::MatrixXd>> tensors();
  std::vector<Eigen::Ref<const Eigen::MatrixXd>> tensors() const;
  std::size_t size() const;

  Parameters zeros_like() const;
  bool all_finite() const;
  // Shape- and bit-exact comparison.
  bool operator==(const Parameters& other) const;
};

using GradientTape = Parameters;

struct RGCNModel {
  std::vector<CanonicalRelation> schema;
  // Column names of the expected input features; empty to check only the
  // dimension.
  std::vector<std::string> feature_columns;
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 256;
  Aggregation aggregation = Aggregation::kSum;
  Readout readout = Readout::kSumPool;
  double dropout_rate = 0.5;
  Parameters params;
  // Free-form settings carried through checkpoints (e.g. feature options).
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t num_layers() const { return params.layers.size(); }
  bool operator==(const RGCNModel&) const = default;
};

struct ModelConfig {
  std::size_t hidden_dim = 256;
  std::size_t num_layers = 2;
  Aggregation aggregation = Aggregation::kSum;
  Readout readout = Readout::kSumPool;
  double dropout_rate = 0.5;
};

// Glorot-uniform weights (bound sqrt(6 / (in + out))) drawn in tensor order
// from Rng(seed); classifier bias zero. Throws InvalidArgument on zero dims.
RGCNModel init_model(std::span<const CanonicalRelation> schema, std::size_t feature_dim,
                     const ModelConfig& config, std::uint64_t seed);

// A graph lowered to the tensors the network consumes. Reusable across
// forward passes of any model with the same schema and feature columns.
struct PreparedGraph {
  // Only nodes the relation touches take part: src_rows / dst_rows are the
  // sorted local indices (within their type) of nodes with an outgoing /
  // incoming edge, and the propagation matrices are indexed by position in
  // those lists.
  struct Relation {
    std::size_t schema_index = 0;
    std::size_t src_offset = 0;
    std::size_t dst_offset = 0;
    std::vector<Eigen::Index> src_rows;
    std::vector<Eigen::Index> dst_rows;
    Eigen::SparseMatrix<double, Eigen::RowMajor> sum;   // dst x src, edge multiplicities
    Eigen::SparseMatrix<double, Eigen::RowMajor> mean;  // rows scaled by 1/in-degree
    // Multiply by W_r before propagating (cheaper when fewer sources).
    bool transform_first = false;
  };
  std::size_t num_nodes = 0;
  Eigen::MatrixXd features;  // num_nodes x feature_dim, global node order
  std::vector<Relation> relations;
  std::optional<GraphLabel> label;
};

// Throws SchemaMismatch when g has a relation outside the schema or the
// features do not match the model's columns.
PreparedGraph prepare_graph(const RGCNModel& model, const HeteroMultigraph& g,
                            const FeatureSet& feats);

struct ForwardCache {
  struct Layer {
    Eigen::MatrixXd input;                   // n x in
    // Per prepared relation: the gathered source rows (transform_first) or
    // the propagated messages, both with `in` columns.
    std::vector<Eigen::MatrixXd> relation_inputs;
    Eigen::MatrixXd pre_activation;          // n x out
    Eigen::MatrixXd dropout_mask;            // n x out, empty when inactive
  };
  std::vector<Layer> layers;
  Eigen::MatrixXd output;  // n x hidden
  Eigen::VectorXd pooled;  // hidden
};

struct ForwardResult {
  Eigen::Vector2d logits;
  ForwardCache cache;
};

// Dropout masks come from Rng(derive_seed(seed, layer)) and are only drawn
// when train_mode is set. Subnormal intermediates are flushed to zero on x86
// (here and in the backward pass).
ForwardResult forward(const RGCNModel& model, const PreparedGraph& pg, bool train_mode,
                      std::uint64_t seed);
ForwardResult forward(const RGCNModel& model, const HeteroMultigraph& g, const FeatureSet& feats,
                      bool train_mode, std::uint64_t seed);

// Cross-entropy of softmax(logits) against the label (index 1 = ATTACK).
double cross_entropy(const Eigen::Vector2d& logits, GraphLabel label);
Eigen::Vector2d softmax(const Eigen::Vector2d& logits);

struct LossAndGradient {
  double loss = 0.0;
  GradientTape tape;
};

// Exact reverse-mode gradient of the loss. Throws NonFiniteLoss when the
// loss or any activation is not finite.
LossAndGradient loss_and_backward(const RGCNModel& model, const PreparedGraph& pg,
                                  GraphLabel label, bool train_mode, std::uint64_t seed);
LossAndGradient loss_and_backward(const RGCNModel& model, const HeteroMultigraph& g,
                                  const FeatureSet& feats, GraphLabel label, bool train_mode,
                                  std::uint64_t seed);

// Same gradient, added onto `tape` (which must mirror the model); returns
// the loss. Avoids a fresh tape per graph when accumulating a batch. Only
// the loss is checked for finiteness here.
double accumulate_gradient(const RGCNModel& model, const PreparedGraph& pg, GraphLabel label,
                           bool train_mode, std::uint64_t seed, GradientTape& tape);

struct AdamOptions {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Parameters m;
  Parameters v;
  std::uint64_t step = 0;
};

AdamState init_adam(const RGCNModel& model);

// g <- grad + weight_decay * theta; m, v updated with bias correction at
// step t = ++state.step; theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(RGCNModel& model, const GradientTape& tape, const AdamOptions& options,
               AdamState& state);

}  // namespace provgraph
