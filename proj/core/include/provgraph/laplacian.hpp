#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "provgraph/hetgraph.hpp"

namespace provgraph {

// Symmetric sparse matrix (both triangles stored).
struct SparseSymMatrix {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;

  Eigen::Index dim() const { return matrix.rows(); }
  Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(matrix); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const { return matrix * x; }
  bool is_symmetric(double tol = 0.0) const;
};

// Normalized Laplacian of one relation, restricted to that relation's
// endpoint set. `nodes[i]` is the global node index (type_offsets order) of
// row i; rows are sorted by global index.
struct RelationLaplacian {
  SparseSymMatrix laplacian;
  std::vector<std::size_t> nodes;
};

// L = I - D^{-1/2} A D^{-1/2} over the symmetrized simple adjacency
// (direction dropped, parallel edges collapsed, self-loops dropped). Rows
// of nodes left without neighbours are zero. Throws UnknownRelation.
RelationLaplacian normalized_laplacian(const HeteroMultigraph& g, const CanonicalRelation& r);

// Same matrix zero-padded into the graph's global n-node index space.
SparseSymMatrix embed_in_global(const RelationLaplacian& layer, std::size_t num_nodes);

// Supra-Laplacian over m layers sharing one n-node index space:
//   diagonal block i       L_i + (m-1) * coupling * I
//   off-diagonal block ij  -coupling * I
// i.e. the layer Laplacians plus coupling times the Laplacian of the
// complete interlayer graph. m = 1 returns the single layer unchanged and
// coupling = 0 gives the block-diagonal matrix. Positive semidefinite.
// Throws DimensionMismatch when layers differ in dimension.
SparseSymMatrix build_block_matrix(std::span<const SparseSymMatrix> layers, double coupling);

// Applies the same supra-Laplacian without assembling it; `x` has m*n rows.
class SupraOperator {
 public:
  SupraOperator(std::vector<SparseSymMatrix> layers, double coupling);

  Eigen::Index dim() const { return static_cast<Eigen::Index>(layers_.size()) * n_; }
  Eigen::Index layer_dim() const { return n_; }
  std::size_t num_layers() const { return layers_.size(); }
  const std::vector<SparseSymMatrix>& layers() const { return layers_; }

  void apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const;

 private:
  std::vector<SparseSymMatrix> layers_;
  double coupling_;
  Eigen::Index n_ = 0;
};

}  // namespace provgraph
