#include <gtest/gtest.h>

#include <vector>

#include "oracles.hpp"
#include "provgraph/error.hpp"
#include "provgraph/lobpcg.hpp"
#include "provgraph/rng.hpp"

namespace provgraph {
namespace {

BlockOperator dense_op(const Eigen::MatrixXd& a) {
  return [a](const Eigen::MatrixXd& x, Eigen::MatrixXd& y) { y = a * x; };
}

Eigen::MatrixXd random_block(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = rng.normal();
  return x;
}

TEST(Lobpcg, Diagonal) {
  Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(10, 1, 10);
  const Eigen::MatrixXd a = d.asDiagonal();
  const auto r = lobpcg(dense_op(a), 10, random_block(10, 3, 1));
  ASSERT_TRUE(r.converged);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.eigenvalues(i), i + 1.0, 1e-10);
}

TEST(Lobpcg, ThreePathLaplacian) {
  const auto a = testing::normalized_laplacian_dense(3, {{0, 1}, {1, 2}});
  const auto r = lobpcg(dense_op(a), 3, random_block(3, 2, 2));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.eigenvalues(0), 0.0, 1e-10);
  EXPECT_NEAR(r.eigenvalues(1), 1.0, 1e-10);
}

TEST(Lobpcg, RandomPsdMatchesJacobi) {
  const auto a = testing::random_psd(100, 5);
  const auto want = testing::jacobi_eigenvalues(a);
  const auto r = lobpcg(dense_op(a), 100, random_block(100, 5, 3), {.tol = 1e-7, .max_iter = 500});
  ASSERT_TRUE(r.converged);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.eigenvalues(i), want[i], 1e-8);
}

TEST(Lobpcg, EigenvectorsOrthonormalWithSmallResiduals) {
  const auto a = testing::random_psd(60, 9, 0.1);
  const auto r = lobpcg(dense_op(a), 60, random_block(60, 4, 4));
  ASSERT_TRUE(r.converged);
  const Eigen::MatrixXd gram = r.eigenvectors.transpose() * r.eigenvectors;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
  for (int j = 0; j < 4; ++j) {
    const double res = (a * r.eigenvectors.col(j) - r.eigenvalues(j) * r.eigenvectors.col(j)).norm();
    EXPECT_LE(res, 1e-6);
    EXPECT_LE(r.residual_norms(j), 1e-6);
  }
}

TEST(Lobpcg, AscendingAndNonNegativeOnPsd) {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto a = testing::random_psd(40, seed);
    const auto r = lobpcg(dense_op(a), 40, random_block(40, 6, seed));
    for (int i = 0; i < 6; ++i) {
      EXPECT_GE(r.eigenvalues(i), -1e-10);
      if (i > 0) EXPECT_LE(r.eigenvalues(i - 1), r.eigenvalues(i) + 1e-12);
    }
  }
}

TEST(Lobpcg, PreconditionerDoesNotChangeAnswer) {
  const auto a = testing::random_psd(80, 21, 0.5);
  const Eigen::VectorXd inv_diag = a.diagonal().cwiseInverse();
  LobpcgOptions opts;
  opts.preconditioner = [&](const Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    y = inv_diag.asDiagonal() * x;
  };
  const auto plain = lobpcg(dense_op(a), 80, random_block(80, 3, 5));
  const auto pre = lobpcg(dense_op(a), 80, random_block(80, 3, 5), opts);
  ASSERT_TRUE(plain.converged && pre.converged);
  EXPECT_LT((plain.eigenvalues - pre.eigenvalues).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Lobpcg, FullBlockEqualsDimension) {
  const auto a = testing::random_psd(6, 31, 1.0);
  const auto r = lobpcg(dense_op(a), 6, random_block(6, 6, 6));
  const auto want = testing::jacobi_eigenvalues(a);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(r.eigenvalues(i), want[i], 1e-10);
}

TEST(Lobpcg, InvalidBlock) {
  const auto a = testing::random_psd(5, 1, 1.0);
  EXPECT_THROW(lobpcg(dense_op(a), 5, Eigen::MatrixXd(5, 0)), InvalidBlock);
  EXPECT_THROW(lobpcg(dense_op(a), 5, random_block(5, 6, 1)), InvalidBlock);
  Eigen::MatrixXd dup = random_block(5, 2, 1);
  dup.col(1) = dup.col(0);
  EXPECT_THROW(lobpcg(dense_op(a), 5, dup), InvalidBlock);
}

TEST(Lobpcg, ReportsNonConvergence) {
  const auto a = testing::random_psd(120, 41);
  const auto r = lobpcg(dense_op(a), 120, random_block(120, 4, 7), {.tol = 1e-14, .max_iter = 2});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2);
  EXPECT_EQ(r.eigenvalues.size(), 4);
}

}  // namespace
}  // namespace provgraph
