#include "provgraph/features.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "provgraph/error.hpp"
#include "provgraph/laplacian.hpp"
#include "provgraph/rng.hpp"

namespace provgraph {

std::vector<std::string> degree_columns(std::span<const CanonicalRelation> relations) {
  std::vector<std::string> columns;
  columns.reserve(2 * relations.size());
  for (const auto& r : relations) {
    columns.push_back("in:" + r.key());
    columns.push_back("out:" + r.key());
  }
  return columns;
}

std::vector<std::string> spectral_columns(std::size_t dim) {
  std::vector<std::string> columns;
  columns.reserve(dim);
  for (std::size_t j = 0; j < dim; ++j) columns.push_back("spectral:" + std::to_string(j));
  return columns;
}

FeatureSet degree_features(const HeteroMultigraph& g) {
  std::vector<CanonicalRelation> relations;
  relations.reserve(g.relations().size());
  for (const auto& [rel, _] : g.relations()) relations.push_back(rel);
  return degree_features(g, relations);
}

FeatureSet degree_features(const HeteroMultigraph& g, std::span<const CanonicalRelation> schema) {
  FeatureSet out;
  out.schema = degree_columns(schema);
  const auto cols = static_cast<Eigen::Index>(out.schema.size());
  for (std::size_t t = 0; t < g.node_types().size(); ++t) {
    out.by_type.emplace(g.node_types()[t],
                        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.nodes(t).size()), cols));
  }
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const CanonicalRelation& rel = schema[c];
    auto found = g.relations().find(rel);
    if (found == g.relations().end()) continue;
    const EdgeList& edges = found->second;
    Eigen::MatrixXd& src = out.by_type.at(rel.src_type);
    Eigen::MatrixXd& dst = out.by_type.at(rel.dst_type);
    const auto in_col = static_cast<Eigen::Index>(2 * c);
    const auto out_col = in_col + 1;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      src(edges.src[e], out_col) += 1.0;
      dst(edges.dst[e], in_col) += 1.0;
    }
  }
  return out;
}

namespace {

// Approximates the supra-Laplacian by diag(L_i) + coupling * (m I - 1 1^T)
// per node, which decouples into one m x m diagonal-plus-rank-one system
// per node; applies the shifted inverse by Sherman-Morrison.
BlockOperator coupling_preconditioner(const SupraOperator& op, double coupling, double shift) {
  const Eigen::Index n = op.layer_dim();
  const auto m = static_cast<Eigen::Index>(op.layers().size());
  Eigen::MatrixXd inv_diag(n, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& l = op.layers()[static_cast<std::size_t>(i)].matrix;
    for (Eigen::Index v = 0; v < n; ++v) {
      inv_diag(v, i) = 1.0 / (l.coeff(v, v) + shift + coupling * static_cast<double>(m));
    }
  }
  // 1 - coupling * sum_i inv_diag(v, i); positive since shift > 0.
  const Eigen::VectorXd denom = (1.0 - coupling * inv_diag.rowwise().sum().array()).matrix();
  return [inv_diag, denom, n, m, coupling](const Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    y.resize(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::VectorXd dot = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < m; ++i) {
        dot.array() += inv_diag.col(i).array() * x.col(c).segment(i * n, n).array();
      }
      const Eigen::VectorXd corr = (coupling * dot.array() / denom.array()).matrix();
      for (Eigen::Index i = 0; i < m; ++i) {
        y.col(c).segment(i * n, n) =
            (inv_diag.col(i).array() * (x.col(c).segment(i * n, n) + corr).array()).matrix();
      }
    }
  };
}

}  // namespace

SpectralEmbedding spectral_embedding(const HeteroMultigraph& g, const SpectralOptions& options) {
  const std::size_t n = g.num_nodes();
  const std::size_t k = options.dim;
  if (k > n) {
    throw InvalidArgument("spectral dimension " + std::to_string(k) + " exceeds node count " +
                          std::to_string(n));
  }
  SpectralEmbedding out;
  out.node_embedding = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  out.eigenvalues = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  if (k == 0 || g.relations().empty()) return out;

  std::vector<SparseSymMatrix> layers;
  layers.reserve(g.relations().size());
  for (const auto& [rel, _] : g.relations()) {
    layers.push_back(embed_in_global(normalized_laplacian(g, rel), n));
  }
  const std::size_t m = layers.size();
  const auto supra_dim = static_cast<Eigen::Index>(m * n);
  const auto kk = static_cast<Eigen::Index>(k);

  Eigen::MatrixXd vectors;
  if (static_cast<std::size_t>(supra_dim) <= options.dense_threshold) {
    const Eigen::MatrixXd dense = build_block_matrix(layers, options.coupling).to_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
    out.eigenvalues = eig.eigenvalues().head(kk);
    vectors = eig.eigenvectors().leftCols(kk);
    out.dense = true;
  } else {
    SupraOperator op(std::move(layers), options.coupling);
    Rng rng(options.seed);
    Eigen::MatrixXd x0(supra_dim, kk);
    for (Eigen::Index j = 0; j < kk; ++j) {
      for (Eigen::Index i = 0; i < supra_dim; ++i) x0(i, j) = rng.normal();
    }
    LobpcgOptions lo;
    lo.tol = options.tol;
    lo.max_iter = options.max_iter;
    if (options.precondition) {
      lo.preconditioner = coupling_preconditioner(op, options.coupling, options.precondition_shift);
    }
    LobpcgResult result = lobpcg(
        [&op](const Eigen::MatrixXd& x, Eigen::MatrixXd& y) { op.apply(x, y); }, supra_dim, x0, lo);
    out.eigenvalues = result.eigenvalues;
    vectors = std::move(result.eigenvectors);
    out.converged = result.converged;
    out.iterations = result.iterations;
  }

  for (Eigen::Index j = 0; j < kk; ++j) {
    Eigen::Index arg = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, j) < 0) vectors.col(j) *= -1.0;
  }
  const auto nn = static_cast<Eigen::Index>(n);
  for (std::size_t layer = 0; layer < m; ++layer) {
    out.node_embedding += vectors.middleRows(static_cast<Eigen::Index>(layer) * nn, nn);
  }
  return out;
}

namespace {

FeatureSet split_by_type(const HeteroMultigraph& g, const Eigen::MatrixXd& stacked,
                         std::vector<std::string> schema) {
  FeatureSet out;
  out.schema = std::move(schema);
  const auto offsets = g.type_offsets();
  for (std::size_t t = 0; t < g.node_types().size(); ++t) {
    out.by_type.emplace(g.node_types()[t],
                        stacked.middleRows(static_cast<Eigen::Index>(offsets[t]),
                                           static_cast<Eigen::Index>(g.nodes(t).size())));
  }
  return out;
}

}  // namespace

FeatureSet spectral_node_features(const HeteroMultigraph& g, const SpectralOptions& options) {
  const SpectralEmbedding emb = spectral_embedding(g, options);
  return FeatureSet::concat(degree_features(g),
                            split_by_type(g, emb.node_embedding, spectral_columns(options.dim)));
}

std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kDegree: return "degree";
    case FeatureMode::kSpectral: return "spectral";
    case FeatureMode::kCombined: return "combined";
  }
  return "combined";
}

FeatureMode parse_feature_mode(std::string_view text) {
  if (text == "degree") return FeatureMode::kDegree;
  if (text == "spectral") return FeatureMode::kSpectral;
  if (text == "combined") return FeatureMode::kCombined;
  throw InvalidArgument("unknown feature mode '" + std::string(text) + "'");
}

std::vector<std::string> feature_columns(std::span<const CanonicalRelation> schema,
                                         const FeatureOptions& options) {
  std::vector<std::string> columns;
  if (options.mode != FeatureMode::kSpectral) columns = degree_columns(schema);
  if (options.mode != FeatureMode::kDegree) {
    auto spectral = spectral_columns(options.spectral.dim);
    columns.insert(columns.end(), spectral.begin(), spectral.end());
  }
  return columns;
}

FeatureSet node_features(const HeteroMultigraph& g, std::span<const CanonicalRelation> schema,
                         const FeatureOptions& options) {
  FeatureSet degree;
  if (options.mode != FeatureMode::kSpectral) {
    degree = degree_features(g, schema);
    if (options.log_degree) {
      for (auto& [_, m] : degree.by_type) m = m.array().log1p().matrix();
    }
  }
  FeatureSet spectral;
  if (options.mode != FeatureMode::kDegree) {
    SpectralOptions so = options.spectral;
    so.dim = std::min(so.dim, g.num_nodes());
    const SpectralEmbedding emb = spectral_embedding(g, so);
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.num_nodes()),
                                                   static_cast<Eigen::Index>(options.spectral.dim));
    padded.leftCols(emb.node_embedding.cols()) = emb.node_embedding;
    spectral = split_by_type(g, padded, spectral_columns(options.spectral.dim));
  }
  if (options.mode == FeatureMode::kDegree) return degree;
  if (options.mode == FeatureMode::kSpectral) return spectral;
  return FeatureSet::concat(degree, spectral);
}

nlohmann::json to_json(const FeatureOptions& options) {
  return {{"mode", to_string(options.mode)},
          {"log_degree", options.log_degree},
          {"spectral_dim", options.spectral.dim},
          {"coupling", options.spectral.coupling},
          {"lobpcg_tol", options.spectral.tol},
          {"lobpcg_max_iter", options.spectral.max_iter},
          {"spectral_seed", options.spectral.seed},
          {"dense_threshold", options.spectral.dense_threshold},
          {"precondition", options.spectral.precondition},
          {"precondition_shift", options.spectral.precondition_shift}};
}

FeatureOptions feature_options_from_json(const nlohmann::json& j) {
  FeatureOptions o;
  if (j.contains("mode")) o.mode = parse_feature_mode(j.at("mode").get<std::string>());
  o.log_degree = j.value("log_degree", o.log_degree);
  o.spectral.dim = j.value("spectral_dim", o.spectral.dim);
  o.spectral.coupling = j.value("coupling", o.spectral.coupling);
  o.spectral.tol = j.value("lobpcg_tol", o.spectral.tol);
  o.spectral.max_iter = j.value("lobpcg_max_iter", o.spectral.max_iter);
  o.spectral.seed = j.value("spectral_seed", o.spectral.seed);
  o.spectral.dense_threshold = j.value("dense_threshold", o.spectral.dense_threshold);
  o.spectral.precondition = j.value("precondition", o.spectral.precondition);
  o.spectral.precondition_shift = j.value("precondition_shift", o.spectral.precondition_shift);
  if (!(o.spectral.precondition_shift > 0)) throw InvalidArgument("precondition_shift must be positive");
  if (o.spectral.coupling < 0) throw InvalidArgument("coupling must be nonnegative");
  return o;
}

}  // namespace provgraph
