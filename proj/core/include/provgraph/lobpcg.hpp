#pragma once

#include <functional>

#include <Eigen/Dense>

namespace provgraph {

// y = A x for an n x b block x. Must not keep state between calls.
using BlockOperator = std::function<void(const Eigen::MatrixXd& x, Eigen::MatrixXd& y)>;

struct LobpcgOptions {
  // Absolute tolerance on ||A x - lambda x||_2 per eigenpair.
  double tol = 1e-6;
  int max_iter = 200;
  // Optional preconditioner T applied to residual blocks.
  BlockOperator preconditioner;
};

struct LobpcgResult {
  Eigen::VectorXd eigenvalues;   // ascending, k entries
  Eigen::MatrixXd eigenvectors;  // n x k, orthonormal columns
  int iterations = 0;
  Eigen::VectorXd residual_norms;
  bool converged = false;
};

// Smallest k = x0.cols() eigenpairs of the symmetric operator `apply_a` by
// locally optimal block preconditioned conjugate gradients.
//
// Each iteration runs Rayleigh-Ritz on the basis [X, W, P] after
// orthonormalizing it block by block (W against X, P against X and W, each
// with a second projection pass and an SVQB step that drops numerically
// dependent columns). Converged columns are soft-locked: they stay in X and
// in the Rayleigh-Ritz step but contribute no W or P directions. When the
// search directions collapse the P block is discarded before giving up.
//
// Throws InvalidBlock when k is not in [1, n] or x0 is rank deficient, and
// BreakdownError when the basis cannot be repaired. Returns converged=false
// with the current iterates when max_iter is exhausted.
LobpcgResult lobpcg(const BlockOperator& apply_a, Eigen::Index n, const Eigen::MatrixXd& x0,
                    const LobpcgOptions& options = {});

}  // namespace provgraph
