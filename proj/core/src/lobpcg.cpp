#include "provgraph/lobpcg.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "provgraph/error.hpp"

namespace provgraph {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Columns whose norm shrinks below this fraction under projection are
// treated as lying in the span already kept.
constexpr double kProjectionDrop = 1e-10;
// SVQB eigenvalue cutoff relative to the largest one.
constexpr double kSvqbDrop = 1e-14;

MatrixXd select_columns(const MatrixXd& m, const std::vector<Index>& cols) {
  MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
  return out;
}

void project_out(MatrixXd& v, const MatrixXd& q) {
  if (q.cols() == 0 || v.cols() == 0) return;
  v.noalias() -= q * (q.transpose() * v);
}

// Orthonormalizes v's columns with SVQB, dropping dependent ones.
MatrixXd svqb(const MatrixXd& v) {
  if (v.cols() == 0) return v;
  MatrixXd gram = v.transpose() * v;
  VectorXd scale(gram.rows());
  std::vector<Index> keep;
  for (Index j = 0; j < gram.rows(); ++j) {
    const double d = gram(j, j);
    if (d > 0 && std::isfinite(d)) {
      scale[j] = 1.0 / std::sqrt(d);
      keep.push_back(j);
    } else {
      scale[j] = 0.0;
    }
  }
  if (keep.empty()) return MatrixXd(v.rows(), 0);
  MatrixXd vs = select_columns(v, keep);
  VectorXd s(static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) s[static_cast<Index>(j)] = scale[keep[j]];
  vs = vs * s.asDiagonal();
  MatrixXd g = vs.transpose() * vs;
  g = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g);
  const VectorXd& theta = eig.eigenvalues();
  const double top = theta.maxCoeff();
  std::vector<Index> good;
  for (Index j = 0; j < theta.size(); ++j) {
    if (theta[j] > kSvqbDrop * top && theta[j] > 0) good.push_back(j);
  }
  MatrixXd basis(vs.cols(), static_cast<Index>(good.size()));
  for (std::size_t j = 0; j < good.size(); ++j) {
    basis.col(static_cast<Index>(j)) = eig.eigenvectors().col(good[j]) / std::sqrt(theta[good[j]]);
  }
  return vs * basis;
}

// Makes v orthonormal and orthogonal to every block in `against`.
MatrixXd orthonormalize(MatrixXd v, const std::vector<const MatrixXd*>& against) {
  if (v.cols() == 0) return v;
  const VectorXd before = v.colwise().norm();
  for (int pass = 0; pass < 2; ++pass) {
    for (const MatrixXd* q : against) project_out(v, *q);
  }
  std::vector<Index> keep;
  for (Index j = 0; j < v.cols(); ++j) {
    if (v.col(j).norm() > kProjectionDrop * before[j]) keep.push_back(j);
  }
  v = select_columns(v, keep);
  v = svqb(v);
  // A second round restores orthogonality lost to cancellation.
  for (const MatrixXd* q : against) project_out(v, *q);
  return svqb(v);
}

struct RitzPairs {
  VectorXd values;
  MatrixXd vectors;
};

RitzPairs rayleigh_ritz(const MatrixXd& s, const MatrixXd& as, Index k) {
  MatrixXd g = s.transpose() * as;
  g = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g);
  if (eig.info() != Eigen::Success) throw BreakdownError("Rayleigh-Ritz eigensolve failed");
  return {eig.eigenvalues().head(k), eig.eigenvectors().leftCols(k)};
}

}  // namespace

LobpcgResult lobpcg(const BlockOperator& apply_a, Index n, const MatrixXd& x0,
                    const LobpcgOptions& options) {
  const Index k = x0.cols();
  if (k < 1 || k > n) {
    throw InvalidBlock("block size " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  if (x0.rows() != n) {
    throw InvalidBlock("initial block has " + std::to_string(x0.rows()) + " rows, expected " +
                       std::to_string(n));
  }
  if (!x0.allFinite()) throw InvalidBlock("initial block has non-finite entries");

  MatrixXd x = orthonormalize(x0, {});
  if (x.cols() < k) throw InvalidBlock("initial block is rank deficient");

  MatrixXd ax;
  apply_a(x, ax);
  {
    RitzPairs rr = rayleigh_ritz(x, ax, k);
    x = x * rr.vectors;
    ax = ax * rr.vectors;
  }
  VectorXd lambda = (x.transpose() * ax).diagonal();

  MatrixXd p(n, 0);
  LobpcgResult result;
  for (int iter = 0;; ++iter) {
    MatrixXd r = ax - x * lambda.asDiagonal();
    VectorXd res = r.colwise().norm();
    std::vector<Index> active;
    for (Index j = 0; j < k; ++j) {
      if (!(res[j] <= options.tol)) active.push_back(j);
    }
    result.iterations = iter;
    if (active.empty() || iter >= options.max_iter) {
      result.eigenvalues = lambda;
      result.eigenvectors = x;
      result.residual_norms = res;
      result.converged = active.empty();
      return result;
    }
    if (!r.allFinite()) throw BreakdownError("non-finite residual at iteration " + std::to_string(iter));

    MatrixXd w = select_columns(r, active);
    if (options.preconditioner) {
      MatrixXd tw;
      options.preconditioner(w, tw);
      w = std::move(tw);
    }
    w = orthonormalize(std::move(w), {&x});

    MatrixXd pa(n, 0);
    if (p.cols() > 0) {
      pa = orthonormalize(select_columns(p, active), {&x, &w});
    }
    if (w.cols() == 0 && pa.cols() == 0) {
      throw BreakdownError("search directions collapsed at iteration " + std::to_string(iter));
    }

    MatrixXd aw, apa;
    apply_a(w, aw);
    if (pa.cols() > 0) apply_a(pa, apa);

    const Index ns = k + w.cols() + pa.cols();
    if (ns > n) {
      // The basis cannot exceed the space; drop P to stay well posed.
      pa.resize(n, 0);
      apa.resize(n, 0);
    }
    MatrixXd s(n, k + w.cols() + pa.cols());
    MatrixXd as(n, s.cols());
    s << x, w, pa;
    as << ax, aw, apa;

    RitzPairs rr = rayleigh_ritz(s, as, k);
    const Index tail = s.cols() - k;
    x = s * rr.vectors;
    ax = as * rr.vectors;
    if (tail > 0) {
      p = s.rightCols(tail) * rr.vectors.bottomRows(tail);
    } else {
      p.resize(n, 0);
    }
    lambda = rr.values;

    // Re-orthonormalize X if rounding has crept in.
    const double drift = (x.transpose() * x - MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
    if (drift > 1e-10) {
      x = orthonormalize(x, {});
      if (x.cols() < k) throw BreakdownError("Ritz block lost rank");
      apply_a(x, ax);
      RitzPairs fix = rayleigh_ritz(x, ax, k);
      x = x * fix.vectors;
      ax = ax * fix.vectors;
      lambda = fix.values;
    }
  }
}

}  // namespace provgraph
