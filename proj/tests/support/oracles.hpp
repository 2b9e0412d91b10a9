#pragma once

// Reference implementations used only by tests. Each one is written
// independently of the library code it checks: plain loops, no shared
// helpers, no Eigen solvers.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "provgraph/feature_set.hpp"
#include "provgraph/hetgraph.hpp"
#include "provgraph/metrics.hpp"
#include "provgraph/rgcn.hpp"

namespace provgraph::testing {

// Cyclic Jacobi rotations; eigenvalues ascending.
std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a, double tol = 1e-14, int max_sweeps = 100);

// Random symmetric PSD matrix B^T B + shift I with a controlled spectrum.
Eigen::MatrixXd random_psd(int n, std::uint64_t seed, double shift = 0.0);

// Normalized Laplacian of an undirected simple graph given as an edge list,
// assembled entry by entry.
Eigen::MatrixXd normalized_laplacian_dense(int n, const std::vector<std::pair<int, int>>& edges);

// Closed forms for the normalized Laplacian.
std::vector<double> path_spectrum(int n);
std::vector<double> complete_spectrum(int n);

// Per-node, per-edge evaluation of the R-GCN directly on the multigraph
// (no sparse matrices, no prepared graph). Inference mode only.
Eigen::Vector2d reference_logits(const RGCNModel& model, const HeteroMultigraph& g,
                                 const FeatureSet& feats);
// Same, also reporting the smallest |pre-activation| over all ReLUs. The loss
// is smooth only while perturbations stay well inside this margin.
Eigen::Vector2d reference_logits(const RGCNModel& model, const HeteroMultigraph& g,
                                 const FeatureSet& feats, double& relu_margin);
double reference_loss(const RGCNModel& model, const HeteroMultigraph& g, const FeatureSet& feats,
                      GraphLabel label);

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

Confusion confusion_oracle(const std::vector<GraphLabel>& predicted,
                           const std::vector<GraphLabel>& truth);

// One Adam update of a scalar, as written in the original algorithm with
// L2 decay folded into the gradient.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double theta, double grad, double lr, double wd, double b1 = 0.9, double b2 = 0.999,
              double eps = 1e-8);
};

// Small labelled graphs for gradient and model tests.
HeteroMultigraph tiny_graph(std::uint64_t seed, std::size_t nodes = 12, bool parallel_edges = true);

// Normal(0, stddev) features for every node of g, columns "f0".."f<dim-1>".
FeatureSet random_features(const HeteroMultigraph& g, std::size_t dim, std::uint64_t seed,
                           double stddev = 1.0);

// A <= nodes-node graph, features and freshly initialised model whose ReLU
// pre-activations all stay at least `margin` away from zero and whose loss
// is not saturated (>= 1e-3). Central differences are only a valid oracle
// away from the kinks, so candidates (derived from `seed`) are drawn until
// one qualifies.
struct GradientFixture {
  HeteroMultigraph graph;
  FeatureSet features;
  RGCNModel model;
  double relu_margin = 0.0;
  std::uint64_t draws = 0;
};
GradientFixture smooth_fixture(std::uint64_t seed, std::size_t nodes, std::size_t layers,
                               Aggregation aggregation, double margin = 0.02);

// Largest relative disagreement between the model's analytic gradient and
// a central finite difference of reference_loss, over every parameter:
// |a - f| / max(|a|, |f|, floor).
double max_gradient_error(const RGCNModel& model, const HeteroMultigraph& g,
                          const FeatureSet& feats, GraphLabel label, double eps = 1e-3,
                          double floor = 1e-6);

}  // namespace provgraph::testing
