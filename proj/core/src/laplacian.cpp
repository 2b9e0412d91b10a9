#include "provgraph/laplacian.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "provgraph/error.hpp"

namespace provgraph {

bool SparseSymMatrix::is_symmetric(double tol) const {
  const Eigen::SparseMatrix<double, Eigen::RowMajor> diff =
      matrix - Eigen::SparseMatrix<double, Eigen::RowMajor>(matrix.transpose());
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
    for (decltype(diff)::InnerIterator it(diff, k); it; ++it) {
      if (std::abs(it.value()) > tol) return false;
    }
  }
  return true;
}

RelationLaplacian normalized_laplacian(const HeteroMultigraph& g, const CanonicalRelation& r) {
  auto found = g.relations().find(r);
  if (found == g.relations().end()) {
    throw UnknownRelation("graph has no relation " + r.to_string());
  }
  const EdgeList& edges = found->second;
  const auto offsets = g.type_offsets();
  const std::size_t src_off = offsets[*g.node_type_index(r.src_type)];
  const std::size_t dst_off = offsets[*g.node_type_index(r.dst_type)];

  RelationLaplacian out;
  out.nodes.reserve(2 * edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out.nodes.push_back(src_off + edges.src[e]);
    out.nodes.push_back(dst_off + edges.dst[e]);
  }
  std::sort(out.nodes.begin(), out.nodes.end());
  out.nodes.erase(std::unique(out.nodes.begin(), out.nodes.end()), out.nodes.end());
  std::unordered_map<std::size_t, Eigen::Index> local;
  local.reserve(out.nodes.size());
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    local.emplace(out.nodes[i], static_cast<Eigen::Index>(i));
  }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  pairs.reserve(2 * edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Eigen::Index u = local[src_off + edges.src[e]];
    const Eigen::Index v = local[dst_off + edges.dst[e]];
    if (u == v) continue;
    pairs.emplace_back(u, v);
    pairs.emplace_back(v, u);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  const auto n = static_cast<Eigen::Index>(out.nodes.size());
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (const auto& [u, v] : pairs) degree[u] += 1.0;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(pairs.size() + static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (degree[i] > 0) triplets.emplace_back(i, i, 1.0);
  }
  for (const auto& [u, v] : pairs) {
    triplets.emplace_back(u, v, -1.0 / std::sqrt(degree[u] * degree[v]));
  }
  out.laplacian.matrix.resize(n, n);
  out.laplacian.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

SparseSymMatrix embed_in_global(const RelationLaplacian& layer, std::size_t num_nodes) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(layer.laplacian.matrix.nonZeros()));
  const auto& m = layer.laplacian.matrix;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, k); it; ++it) {
      triplets.emplace_back(static_cast<Eigen::Index>(layer.nodes[static_cast<std::size_t>(it.row())]),
                            static_cast<Eigen::Index>(layer.nodes[static_cast<std::size_t>(it.col())]),
                            it.value());
    }
  }
  SparseSymMatrix out;
  const auto n = static_cast<Eigen::Index>(num_nodes);
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

SparseSymMatrix build_block_matrix(std::span<const SparseSymMatrix> layers, double coupling) {
  if (coupling < 0.0) throw InvalidArgument("coupling must be nonnegative");
  SparseSymMatrix out;
  if (layers.empty()) return out;
  const Eigen::Index n = layers.front().dim();
  const auto m = static_cast<Eigen::Index>(layers.size());
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& layer = layers[static_cast<std::size_t>(i)].matrix;
    if (layer.rows() != n || layer.cols() != n) {
      throw DimensionMismatch("layer " + std::to_string(i) + " is " + std::to_string(layer.rows()) +
                              "x" + std::to_string(layer.cols()) + ", expected " +
                              std::to_string(n) + "x" + std::to_string(n));
    }
    for (Eigen::Index k = 0; k < layer.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(layer, k); it; ++it) {
        triplets.emplace_back(i * n + it.row(), i * n + it.col(), it.value());
      }
    }
    if (coupling == 0.0 || m == 1) continue;
    for (Eigen::Index v = 0; v < n; ++v) {
      triplets.emplace_back(i * n + v, i * n + v, static_cast<double>(m - 1) * coupling);
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j != i) triplets.emplace_back(i * n + v, j * n + v, -coupling);
      }
    }
  }
  out.matrix.resize(m * n, m * n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

SupraOperator::SupraOperator(std::vector<SparseSymMatrix> layers, double coupling)
    : layers_(std::move(layers)), coupling_(coupling) {
  if (coupling < 0.0) throw InvalidArgument("coupling must be nonnegative");
  if (!layers_.empty()) n_ = layers_.front().dim();
  for (const auto& layer : layers_) {
    if (layer.dim() != n_) throw DimensionMismatch("supra operator layers differ in dimension");
  }
}

void SupraOperator::apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const {
  const auto m = static_cast<Eigen::Index>(layers_.size());
  y.resize(x.rows(), x.cols());
  if (m == 0) return;
  // y_i = L_i x_i + c * (m x_i - sum_j x_j)
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n_, x.cols());
  if (coupling_ != 0.0 && m > 1) {
    for (Eigen::Index i = 0; i < m; ++i) sum += x.middleRows(i * n_, n_);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    auto yi = y.middleRows(i * n_, n_);
    const auto xi = x.middleRows(i * n_, n_);
    yi.noalias() = layers_[static_cast<std::size_t>(i)].matrix * xi;
    if (coupling_ != 0.0 && m > 1) {
      yi += coupling_ * (static_cast<double>(m) * xi - sum);
    }
  }
}

}  // namespace provgraph
