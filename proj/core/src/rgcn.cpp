#include "provgraph/rgcn.hpp"

#include <cmath>
#include <map>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "provgraph/error.hpp"
#include "provgraph/rng.hpp"

namespace provgraph {

std::string_view to_string(Aggregation a) { return a == Aggregation::kSum ? "sum" : "mean"; }

Aggregation parse_aggregation(std::string_view text) {
  if (text == "sum" || text == "SUM") return Aggregation::kSum;
  if (text == "mean" || text == "MEAN") return Aggregation::kMean;
  throw InvalidArgument("unknown aggregation '" + std::string(text) + "'");
}

std::string_view to_string(Readout r) { return r == Readout::kSumPool ? "sum_pool" : "mean_pool"; }

Readout parse_readout(std::string_view text) {
  if (text == "sum_pool" || text == "SUM_POOL" || text == "sum") return Readout::kSumPool;
  if (text == "mean_pool" || text == "MEAN_POOL" || text == "mean") return Readout::kMeanPool;
  throw InvalidArgument("unknown readout '" + std::string(text) + "'");
}

namespace {

// Saturated softmax outputs feed subnormal values into the backward pass,
// which run two orders of magnitude slower on x86. Flushes them to zero for
// the lifetime of the guard and restores the caller's mode afterwards.
class FlushSubnormals {
 public:
#if defined(__SSE__)
  FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushSubnormals() { _mm_setcsr(saved_); }

 private:
  unsigned int saved_;
#endif
};

bool same(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace

bool RGCNLayer::operator==(const RGCNLayer& other) const {
  if (!same(self_weight, other.self_weight)) return false;
  if (relation_weights.size() != other.relation_weights.size()) return false;
  for (std::size_t i = 0; i < relation_weights.size(); ++i) {
    if (!same(relation_weights[i], other.relation_weights[i])) return false;
  }
  return true;
}

bool Parameters::operator==(const Parameters& other) const {
  return layers == other.layers && same(classifier_weight, other.classifier_weight) &&
         same(classifier_bias, other.classifier_bias);
}

std::vector<Eigen::Ref<Eigen::MatrixXd>> Parameters::tensors() {
  std::vector<Eigen::Ref<Eigen::MatrixXd>> out;
  for (auto& layer : layers) {
    out.emplace_back(layer.self_weight);
    for (auto& w : layer.relation_weights) out.emplace_back(w);
  }
  out.emplace_back(classifier_weight);
  out.emplace_back(classifier_bias);
  return out;
}

std::vector<Eigen::Ref<const Eigen::MatrixXd>> Parameters::tensors() const {
  std::vector<Eigen::Ref<const Eigen::MatrixXd>> out;
  for (const auto& layer : layers) {
    out.emplace_back(layer.self_weight);
    for (const auto& w : layer.relation_weights) out.emplace_back(w);
  }
  out.emplace_back(classifier_weight);
  out.emplace_back(classifier_bias);
  return out;
}

std::size_t Parameters::size() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += static_cast<std::size_t>(t.size());
  return n;
}

Parameters Parameters::zeros_like() const {
  Parameters z;
  z.layers.reserve(layers.size());
  for (const auto& layer : layers) {
    RGCNLayer zl;
    zl.self_weight = Eigen::MatrixXd::Zero(layer.self_weight.rows(), layer.self_weight.cols());
    for (const auto& w : layer.relation_weights) {
      zl.relation_weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    z.layers.push_back(std::move(zl));
  }
  z.classifier_weight = Eigen::MatrixXd::Zero(classifier_weight.rows(), classifier_weight.cols());
  z.classifier_bias = Eigen::VectorXd::Zero(classifier_bias.size());
  return z;
}

bool Parameters::all_finite() const {
  for (const auto& t : tensors()) {
    if (!t.allFinite()) return false;
  }
  return true;
}

RGCNModel init_model(std::span<const CanonicalRelation> schema, std::size_t feature_dim,
                     const ModelConfig& config, std::uint64_t seed) {
  if (feature_dim == 0 || config.hidden_dim == 0 || config.num_layers == 0) {
    throw InvalidArgument("model dimensions and layer count must be at least 1");
  }
  if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0)) {
    throw InvalidArgument("dropout rate must lie in [0, 1)");
  }
  RGCNModel model;
  model.schema.assign(schema.begin(), schema.end());
  model.feature_dim = feature_dim;
  model.hidden_dim = config.hidden_dim;
  model.aggregation = config.aggregation;
  model.readout = config.readout;
  model.dropout_rate = config.dropout_rate;

  Rng rng(seed);
  auto glorot = [&rng](Eigen::Index in, Eigen::Index out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Eigen::MatrixXd w(in, out);
    for (Eigen::Index j = 0; j < out; ++j) {
      for (Eigen::Index i = 0; i < in; ++i) w(i, j) = rng.uniform(-bound, bound);
    }
    return w;
  };
  const auto hidden = static_cast<Eigen::Index>(config.hidden_dim);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const auto in = l == 0 ? static_cast<Eigen::Index>(feature_dim) : hidden;
    RGCNLayer layer;
    layer.self_weight = glorot(in, hidden);
    for (std::size_t r = 0; r < schema.size(); ++r) layer.relation_weights.push_back(glorot(in, hidden));
    model.params.layers.push_back(std::move(layer));
  }
  model.params.classifier_weight = glorot(hidden, 2);
  model.params.classifier_bias = Eigen::VectorXd::Zero(2);
  return model;
}

PreparedGraph prepare_graph(const RGCNModel& model, const HeteroMultigraph& g,
                            const FeatureSet& feats) {
  if (feats.dim() != model.feature_dim) {
    throw SchemaMismatch("feature dimension " + std::to_string(feats.dim()) +
                         " does not match model input dimension " +
                         std::to_string(model.feature_dim));
  }
  if (!model.feature_columns.empty() && feats.schema != model.feature_columns) {
    throw SchemaMismatch("feature columns differ from the columns the model was built for");
  }
  std::map<CanonicalRelation, std::size_t> schema_index;
  for (std::size_t i = 0; i < model.schema.size(); ++i) schema_index.emplace(model.schema[i], i);

  PreparedGraph pg;
  pg.num_nodes = g.num_nodes();
  pg.label = g.label();
  try {
    pg.features = feats.stacked(g);
  } catch (const Error& e) {
    throw SchemaMismatch(std::string("features do not cover the graph: ") + e.what());
  }
  if (!pg.features.allFinite()) throw SchemaMismatch("features contain non-finite values");

  const auto offsets = g.type_offsets();
  for (const auto& [rel, edges] : g.relations()) {
    auto found = schema_index.find(rel);
    if (found == schema_index.end()) {
      throw SchemaMismatch("relation " + rel.to_string() + " is not in the model schema");
    }
    PreparedGraph::Relation pr;
    pr.schema_index = found->second;
    const std::size_t src_t = *g.node_type_index(rel.src_type);
    const std::size_t dst_t = *g.node_type_index(rel.dst_type);
    pr.src_offset = offsets[src_t];
    pr.dst_offset = offsets[dst_t];

    // Local index -> position in the active row lists.
    std::vector<int> src_pos(g.nodes(src_t).size(), -1);
    std::vector<int> dst_pos(g.nodes(dst_t).size(), -1);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      src_pos[edges.src[e]] = 0;
      dst_pos[edges.dst[e]] = 0;
    }
    auto number = [](std::vector<int>& pos, std::vector<Eigen::Index>& rows) {
      for (std::size_t i = 0; i < pos.size(); ++i) {
        if (pos[i] < 0) continue;
        pos[i] = static_cast<int>(rows.size());
        rows.push_back(static_cast<Eigen::Index>(i));
      }
    };
    number(src_pos, pr.src_rows);
    number(dst_pos, pr.dst_rows);
    pr.transform_first = pr.src_rows.size() < pr.dst_rows.size();

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(edges.size());
    std::vector<double> in_degree(pr.dst_rows.size(), 0.0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const int d = dst_pos[edges.dst[e]];
      triplets.emplace_back(d, src_pos[edges.src[e]], 1.0);
      in_degree[static_cast<std::size_t>(d)] += 1.0;
    }
    pr.sum.resize(static_cast<Eigen::Index>(pr.dst_rows.size()),
                  static_cast<Eigen::Index>(pr.src_rows.size()));
    pr.sum.setFromTriplets(triplets.begin(), triplets.end());
    pr.sum.makeCompressed();
    pr.mean = pr.sum;
    for (Eigen::Index row = 0; row < pr.mean.outerSize(); ++row) {
      for (decltype(pr.mean)::InnerIterator it(pr.mean, row); it; ++it) {
        it.valueRef() /= in_degree[static_cast<std::size_t>(row)];
      }
    }
    pg.relations.push_back(std::move(pr));
  }
  return pg;
}

namespace {

const Eigen::SparseMatrix<double, Eigen::RowMajor>& propagation(const RGCNModel& model,
                                                                const PreparedGraph::Relation& r) {
  return model.aggregation == Aggregation::kSum ? r.sum : r.mean;
}

std::vector<Eigen::Index> shifted(const std::vector<Eigen::Index>& rows, std::size_t offset) {
  std::vector<Eigen::Index> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i] + static_cast<Eigen::Index>(offset);
  return out;
}

void check_compatible(const RGCNModel& model, const PreparedGraph& pg) {
  if (static_cast<std::size_t>(pg.features.cols()) != model.feature_dim) {
    throw SchemaMismatch("prepared features have " + std::to_string(pg.features.cols()) +
                         " columns, model expects " + std::to_string(model.feature_dim));
  }
  for (const auto& r : pg.relations) {
    if (r.schema_index >= model.schema.size()) {
      throw SchemaMismatch("prepared graph refers to a relation outside the model schema");
    }
    const auto n = static_cast<Eigen::Index>(pg.num_nodes);
    const bool src_ok = r.src_rows.empty() || static_cast<Eigen::Index>(r.src_offset) + r.src_rows.back() < n;
    const bool dst_ok = r.dst_rows.empty() || static_cast<Eigen::Index>(r.dst_offset) + r.dst_rows.back() < n;
    if (!src_ok || !dst_ok) throw SchemaMismatch("prepared relation indexes past the node count");
  }
}

}  // namespace

ForwardResult forward(const RGCNModel& model, const PreparedGraph& pg, bool train_mode,
                      std::uint64_t seed) {
  const FlushSubnormals guard;
  check_compatible(model, pg);
  ForwardResult result;
  ForwardCache& cache = result.cache;
  const bool dropout = train_mode && model.dropout_rate > 0.0;
  const double keep_scale = 1.0 / (1.0 - model.dropout_rate);

  Eigen::MatrixXd h = pg.features;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const RGCNLayer& layer = model.params.layers[l];
    ForwardCache::Layer lc;
    Eigen::MatrixXd z = h * layer.self_weight;
    lc.relation_inputs.reserve(pg.relations.size());
    for (const auto& r : pg.relations) {
      const auto& w = layer.relation_weights[r.schema_index];
      const auto dst = shifted(r.dst_rows, r.dst_offset);
      Eigen::MatrixXd src = h(shifted(r.src_rows, r.src_offset), Eigen::all);
      if (r.transform_first) {
        const Eigen::MatrixXd t = src * w;
        z(dst, Eigen::all) += propagation(model, r) * t;
        lc.relation_inputs.push_back(std::move(src));
      } else {
        Eigen::MatrixXd a = propagation(model, r) * src;
        z(dst, Eigen::all) += a * w;
        lc.relation_inputs.push_back(std::move(a));
      }
    }
    Eigen::MatrixXd out = z.cwiseMax(0.0);
    if (dropout) {
      Rng rng(derive_seed(seed, l));
      lc.dropout_mask.resize(out.rows(), out.cols());
      for (Eigen::Index j = 0; j < out.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
          lc.dropout_mask(i, j) = rng.bernoulli(model.dropout_rate) ? 0.0 : keep_scale;
        }
      }
      out.array() *= lc.dropout_mask.array();
    }
    lc.input = std::move(h);
    lc.pre_activation = std::move(z);
    cache.layers.push_back(std::move(lc));
    h = std::move(out);
  }
  cache.pooled = h.colwise().sum().transpose();
  if (model.readout == Readout::kMeanPool && pg.num_nodes > 0) {
    cache.pooled /= static_cast<double>(pg.num_nodes);
  }
  cache.output = std::move(h);
  result.logits = model.params.classifier_weight.transpose() * cache.pooled +
                  model.params.classifier_bias;
  return result;
}

ForwardResult forward(const RGCNModel& model, const HeteroMultigraph& g, const FeatureSet& feats,
                      bool train_mode, std::uint64_t seed) {
  return forward(model, prepare_graph(model, g, feats), train_mode, seed);
}

Eigen::Vector2d softmax(const Eigen::Vector2d& logits) {
  const double m = logits.maxCoeff();
  Eigen::Vector2d e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

double cross_entropy(const Eigen::Vector2d& logits, GraphLabel label) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(label == GraphLabel::kAttack ? 1 : 0);
}

double accumulate_gradient(const RGCNModel& model, const PreparedGraph& pg, GraphLabel label,
                           bool train_mode, std::uint64_t seed, GradientTape& tape) {
  const FlushSubnormals guard;
  ForwardResult fr = forward(model, pg, train_mode, seed);
  const double loss = cross_entropy(fr.logits, label);
  if (!std::isfinite(loss) || !fr.logits.allFinite()) {
    throw NonFiniteLoss("loss is not finite (logits " + std::to_string(fr.logits(0)) + ", " +
                        std::to_string(fr.logits(1)) + ")");
  }
  if (tape.layers.size() != model.num_layers()) {
    throw DimensionMismatch("gradient tape does not mirror the model parameters");
  }
  const ForwardCache& cache = fr.cache;

  Eigen::Vector2d dlogits = softmax(fr.logits);
  dlogits(label == GraphLabel::kAttack ? 1 : 0) -= 1.0;
  tape.classifier_weight.noalias() += cache.pooled * dlogits.transpose();
  tape.classifier_bias += dlogits;
  Eigen::VectorXd dpooled = model.params.classifier_weight * dlogits;
  if (model.readout == Readout::kMeanPool && pg.num_nodes > 0) {
    dpooled /= static_cast<double>(pg.num_nodes);
  }
  Eigen::MatrixXd dh = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(pg.num_nodes)) *
                       dpooled.transpose();

  for (std::size_t l = model.num_layers(); l-- > 0;) {
    const RGCNLayer& layer = model.params.layers[l];
    const ForwardCache::Layer& lc = cache.layers[l];
    RGCNLayer& gl = tape.layers[l];
    if (lc.dropout_mask.size() > 0) dh.array() *= lc.dropout_mask.array();
    Eigen::MatrixXd dz = (lc.pre_activation.array() > 0.0).select(dh.array(), 0.0).matrix();
    gl.self_weight.noalias() += lc.input.transpose() * dz;
    Eigen::MatrixXd dinput;
    const bool need_input_grad = l > 0;
    if (need_input_grad) dinput.noalias() = dz * layer.self_weight.transpose();
    for (std::size_t k = 0; k < pg.relations.size(); ++k) {
      const auto& r = pg.relations[k];
      const auto& w = layer.relation_weights[r.schema_index];
      auto& gw = gl.relation_weights[r.schema_index];
      const auto& prop = propagation(model, r);
      const Eigen::MatrixXd dz_dst = dz(shifted(r.dst_rows, r.dst_offset), Eigen::all);
      if (r.transform_first) {
        const Eigen::MatrixXd dt = prop.transpose() * dz_dst;
        gw.noalias() += lc.relation_inputs[k].transpose() * dt;
        if (need_input_grad) {
          dinput(shifted(r.src_rows, r.src_offset), Eigen::all) += dt * w.transpose();
        }
      } else {
        gw.noalias() += lc.relation_inputs[k].transpose() * dz_dst;
        if (need_input_grad) {
          const Eigen::MatrixXd da = dz_dst * w.transpose();
          dinput(shifted(r.src_rows, r.src_offset), Eigen::all) += prop.transpose() * da;
        }
      }
    }
    if (need_input_grad) dh = std::move(dinput);
  }
  return loss;
}

LossAndGradient loss_and_backward(const RGCNModel& model, const PreparedGraph& pg,
                                  GraphLabel label, bool train_mode, std::uint64_t seed) {
  LossAndGradient out;
  out.tape = model.params.zeros_like();
  out.loss = accumulate_gradient(model, pg, label, train_mode, seed, out.tape);
  if (!out.tape.all_finite()) throw NonFiniteLoss("gradient contains non-finite values");
  return out;
}

LossAndGradient loss_and_backward(const RGCNModel& model, const HeteroMultigraph& g,
                                  const FeatureSet& feats, GraphLabel label, bool train_mode,
                                  std::uint64_t seed) {
  return loss_and_backward(model, prepare_graph(model, g, feats), label, train_mode, seed);
}

AdamState init_adam(const RGCNModel& model) {
  AdamState s;
  s.m = model.params.zeros_like();
  s.v = model.params.zeros_like();
  return s;
}

void adam_step(RGCNModel& model, const GradientTape& tape, const AdamOptions& options,
               AdamState& state) {
  auto params = model.params.tensors();
  const auto grads = tape.tensors();
  auto ms = state.m.tensors();
  auto vs = state.v.tensors();
  if (grads.size() != params.size() || ms.size() != params.size() || vs.size() != params.size()) {
    throw DimensionMismatch("gradient tape does not mirror the model parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols() ||
        ms[i].rows() != params[i].rows() || ms[i].cols() != params[i].cols()) {
      throw DimensionMismatch("gradient tensor " + std::to_string(i) + " has the wrong shape");
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(options.beta1, t);
  const double c2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& m = ms[i];
    auto& v = vs[i];
    const Eigen::MatrixXd g = grads[i] + options.weight_decay * p;
    m = options.beta1 * m + (1.0 - options.beta1) * g;
    v = options.beta2 * v + (1.0 - options.beta2) * g.cwiseProduct(g);
    p.array() -= options.learning_rate * (m.array() / c1) /
                 ((v.array() / c2).sqrt() + options.epsilon);
  }
}

}  // namespace provgraph
