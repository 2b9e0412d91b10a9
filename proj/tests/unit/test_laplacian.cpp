#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "oracles.hpp"
#include "provgraph/error.hpp"
#include "provgraph/laplacian.hpp"

namespace provgraph {
namespace {

const CanonicalRelation kInform{"task", "WasInformedBy", "task"};

HeteroMultigraph from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  GraphBuilder b;
  std::vector<NodeRef> refs;
  for (int i = 0; i < n; ++i) refs.push_back(b.add_node("task", "t" + std::to_string(i)));
  for (auto [u, v] : edges) b.add_edge(refs[u], "WasInformedBy", refs[v]);
  return std::move(b).finish();
}

std::vector<double> spectrum(const SparseSymMatrix& m) {
  return testing::jacobi_eigenvalues(m.to_dense());
}

void expect_spectra_near(const std::vector<double>& got, const std::vector<double>& want,
                         double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << i;
}

TEST(Laplacian, ThreePath) {
  const auto g = from_edges(3, {{0, 1}, {1, 2}});
  const auto layer = normalized_laplacian(g, kInform);
  EXPECT_TRUE(layer.laplacian.is_symmetric());
  expect_spectra_near(spectrum(layer.laplacian), {0.0, 1.0, 2.0}, 1e-10);
}

TEST(Laplacian, CompleteK4) {
  const auto g = from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  expect_spectra_near(spectrum(normalized_laplacian(g, kInform).laplacian),
                      {0.0, 4.0 / 3, 4.0 / 3, 4.0 / 3}, 1e-10);
}

TEST(Laplacian, ClosedFormsAcrossSizes) {
  for (int n = 2; n <= 30; n += 4) {
    std::vector<std::pair<int, int>> path, complete;
    for (int i = 0; i + 1 < n; ++i) path.emplace_back(i, i + 1);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) complete.emplace_back(i, j);
    expect_spectra_near(spectrum(normalized_laplacian(from_edges(n, path), kInform).laplacian),
                        testing::path_spectrum(n), 1e-10);
    expect_spectra_near(
        spectrum(normalized_laplacian(from_edges(n, complete), kInform).laplacian),
        testing::complete_spectrum(n), 1e-10);
  }
}

TEST(Laplacian, MatchesEntrywiseOracle) {
  // Direction, parallel edges and self-loops must not matter.
  const std::vector<std::pair<int, int>> edges{{0, 1}, {1, 0}, {1, 0}, {2, 1}, {3, 3},
                                               {3, 4}, {4, 2}, {0, 4}};
  const auto layer = normalized_laplacian(from_edges(5, edges), kInform);
  const auto want = testing::normalized_laplacian_dense(5, {{0, 1}, {1, 2}, {3, 4}, {2, 4}, {0, 4}});
  EXPECT_LT((layer.laplacian.to_dense() - want).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Laplacian, IsolatedNodeGivesZeroMatrix) {
  const auto g = from_edges(1, {{0, 0}});
  const auto layer = normalized_laplacian(g, kInform);
  ASSERT_EQ(layer.laplacian.dim(), 1);
  EXPECT_EQ(layer.laplacian.to_dense()(0, 0), 0.0);
  EXPECT_EQ(layer.nodes, std::vector<std::size_t>{0});
}

TEST(Laplacian, RestrictedToEndpoints) {
  GraphBuilder b;
  const auto t = b.add_node("task", "t");
  const auto f = b.add_node("file", "f");
  const auto s = b.add_node("socket", "s");
  b.add_edge(t, "Used", f);
  b.add_edge(s, "WasDerivedFrom", s);
  const auto g = std::move(b).finish();
  const auto layer = normalized_laplacian(g, {"task", "Used", "file"});
  EXPECT_EQ(layer.laplacian.dim(), 2);
  EXPECT_EQ(embed_in_global(layer, g.num_nodes()).dim(), 3);
  EXPECT_THROW(normalized_laplacian(g, {"task", "Used", "socket"}), UnknownRelation);
}

TEST(Laplacian, SpectrumInUnitInterval) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = testing::tiny_graph(seed, 20);
    for (const auto& [rel, _] : g.relations()) {
      const auto ev = spectrum(normalized_laplacian(g, rel).laplacian);
      EXPECT_GE(ev.front(), -1e-12);
      EXPECT_LE(ev.back(), 2.0 + 1e-12);
    }
  }
}

TEST(BlockMatrix, SingleLayerUnchanged) {
  const auto g = from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
  const auto l = embed_in_global(normalized_laplacian(g, kInform), 4);
  const std::vector<SparseSymMatrix> layers{l};
  EXPECT_EQ((build_block_matrix(layers, 0.7).to_dense() - l.to_dense()).norm(), 0.0);
}

TEST(BlockMatrix, ZeroCouplingIsUnionOfSpectra) {
  const auto a = embed_in_global(normalized_laplacian(from_edges(3, {{0, 1}, {1, 2}}), kInform), 3);
  const auto b = embed_in_global(
      normalized_laplacian(from_edges(3, {{0, 1}, {1, 2}, {0, 2}}), kInform), 3);
  const std::vector<SparseSymMatrix> layers{a, b};
  auto want = spectrum(a);
  const auto sb = spectrum(b);
  want.insert(want.end(), sb.begin(), sb.end());
  std::sort(want.begin(), want.end());
  expect_spectra_near(spectrum(build_block_matrix(layers, 0.0)), want, 1e-10);
}

TEST(BlockMatrix, TwoPathsMatchDenseAssembly) {
  const double gamma = 0.5;
  const auto l = embed_in_global(normalized_laplacian(from_edges(3, {{0, 1}, {1, 2}}), kInform), 3);
  const std::vector<SparseSymMatrix> layers{l, l};
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(6, 6);
  const Eigen::MatrixXd p = testing::normalized_laplacian_dense(3, {{0, 1}, {1, 2}});
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      dense(i, j) = p(i, j);
      dense(3 + i, 3 + j) = p(i, j);
    }
    dense(i, i) += gamma;
    dense(3 + i, 3 + i) += gamma;
    dense(i, 3 + i) = -gamma;
    dense(3 + i, i) = -gamma;
  }
  const auto block = build_block_matrix(layers, gamma);
  EXPECT_LT((block.to_dense() - dense).cwiseAbs().maxCoeff(), 1e-10);
  expect_spectra_near(spectrum(block), testing::jacobi_eigenvalues(dense), 1e-10);
}

TEST(BlockMatrix, OperatorMatchesAssembly) {
  const auto g = testing::tiny_graph(11, 16);
  std::vector<SparseSymMatrix> layers;
  for (const auto& [rel, _] : g.relations())
    layers.push_back(embed_in_global(normalized_laplacian(g, rel), g.num_nodes()));
  const auto block = build_block_matrix(layers, 0.3);
  const SupraOperator op(layers, 0.3);
  ASSERT_EQ(op.dim(), block.dim());
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(op.dim(), 3);
  Eigen::MatrixXd y;
  op.apply(x, y);
  EXPECT_LT((y - block.apply(x)).cwiseAbs().maxCoeff(), 1e-12);
  const auto ev = spectrum(block);
  EXPECT_GE(ev.front(), -1e-10);
}

TEST(BlockMatrix, DimensionMismatch) {
  const std::vector<SparseSymMatrix> layers{
      embed_in_global(normalized_laplacian(from_edges(2, {{0, 1}}), kInform), 2),
      embed_in_global(normalized_laplacian(from_edges(3, {{0, 1}}), kInform), 3)};
  EXPECT_THROW(build_block_matrix(layers, 0.1), DimensionMismatch);
}

}  // namespace
}  // namespace provgraph
