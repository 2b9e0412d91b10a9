#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "provgraph/error.hpp"
#include "provgraph/rgcn.hpp"
#include "provgraph/rng.hpp"

namespace provgraph {
namespace {

std::vector<CanonicalRelation> schema_of(const HeteroMultigraph& g) {
  std::vector<CanonicalRelation> s;
  for (const auto& [rel, _] : g.relations()) s.push_back(rel);
  return s;
}

RGCNModel small_model(const HeteroMultigraph& g, std::size_t dim, std::size_t layers,
                      Aggregation agg, Readout readout = Readout::kSumPool,
                      std::uint64_t seed = 1) {
  ModelConfig c;
  c.hidden_dim = 8;
  c.num_layers = layers;
  c.aggregation = agg;
  c.readout = readout;
  return init_model(schema_of(g), dim, c, seed);
}

TEST(RGCN, ZeroModelGivesLogTwo) {
  const auto g = testing::tiny_graph(1);
  const auto f = testing::random_features(g, 4, 1);
  auto model = small_model(g, 4, 2, Aggregation::kSum);
  for (auto t : model.params.tensors()) t.setZero();
  const auto r = forward(model, g, f, false, 0);
  EXPECT_EQ(r.logits, Eigen::Vector2d::Zero());
  EXPECT_NEAR(cross_entropy(r.logits, GraphLabel::kAttack), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(cross_entropy(r.logits, GraphLabel::kBenign), std::numbers::ln2, 1e-15);
}

TEST(RGCN, MatchesPerEdgeReference) {
  for (Aggregation agg : {Aggregation::kSum, Aggregation::kMean}) {
    for (Readout ro : {Readout::kSumPool, Readout::kMeanPool}) {
      for (std::size_t layers : {1u, 2u, 3u}) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
          const auto g = testing::tiny_graph(seed, 10 + seed * 3);
          const auto f = testing::random_features(g, 5, seed);
          const auto model = small_model(g, 5, layers, agg, ro, seed);
          const Eigen::Vector2d got = forward(model, g, f, false, 0).logits;
          const Eigen::Vector2d want = testing::reference_logits(model, g, f);
          EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-10);
        }
      }
    }
  }
}

TEST(RGCN, FiniteDifferenceGradient) {
  for (Aggregation agg : {Aggregation::kSum, Aggregation::kMean}) {
    for (std::size_t layers : {1u, 2u}) {
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto fx = testing::smooth_fixture(seed, 15, layers, agg);
        EXPECT_LT(testing::max_gradient_error(fx.model, fx.graph, fx.features, *fx.graph.label()), 1e-4)
            << to_string(agg) << " layers " << layers << " seed " << seed;
      }
    }
  }
}

TEST(RGCN, FiniteDifferenceBreaksAtKinks) {
  // A pre-activation closer to zero than the step makes the central
  // difference disagree; this is what smooth_fixture screens out.
  const auto g = testing::tiny_graph(3, 15);
  const auto f = testing::random_features(g, 3, 13);
  const auto model = small_model(g, 3, 1, Aggregation::kMean, Readout::kSumPool, 3);
  double margin = 0;
  testing::reference_logits(model, g, f, margin);
  ASSERT_LT(margin, 1e-3);
  EXPECT_GT(testing::max_gradient_error(model, g, f, *g.label(), 1e-3), 1e-4);
  EXPECT_LT(testing::max_gradient_error(model, g, f, *g.label(), 1e-6), 1e-3);
}

TEST(RGCN, GradientSensitiveToFeatures) {
  const auto g = testing::tiny_graph(2);
  const auto f = testing::random_features(g, 3, 2);
  FeatureSet doubled = f;
  for (auto& [_, m] : doubled.by_type) m *= 2.0;
  const auto model = small_model(g, 3, 2, Aggregation::kSum);
  const auto a = loss_and_backward(model, g, f, GraphLabel::kAttack, false, 0);
  const auto b = loss_and_backward(model, g, doubled, GraphLabel::kAttack, false, 0);
  EXPECT_NE(a.loss, b.loss);
  EXPECT_FALSE(a.tape == b.tape);
}

TEST(RGCN, AccumulateAddsOntoTape) {
  const auto g = testing::tiny_graph(3);
  const auto f = testing::random_features(g, 3, 3);
  const auto model = small_model(g, 3, 2, Aggregation::kMean);
  const auto pg = prepare_graph(model, g, f);
  const auto once = loss_and_backward(model, pg, GraphLabel::kBenign, true, 9);
  GradientTape tape = model.params.zeros_like();
  accumulate_gradient(model, pg, GraphLabel::kBenign, true, 9, tape);
  const double loss = accumulate_gradient(model, pg, GraphLabel::kBenign, true, 9, tape);
  EXPECT_EQ(loss, once.loss);
  const auto got = tape.tensors();
  const auto want = once.tape.tensors();
  for (std::size_t k = 0; k < got.size(); ++k)
    EXPECT_LT((got[k] - 2 * want[k]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RGCN, SingletonNeighbourhoodSumEqualsMean) {
  // Every destination has in-degree one in each relation.
  GraphBuilder b;
  std::vector<NodeRef> t;
  for (int i = 0; i < 5; ++i) t.push_back(b.add_node("task", "t" + std::to_string(i)));
  const auto f0 = b.add_node("file", "f0");
  for (int i = 0; i + 1 < 5; ++i) b.add_edge(t[i], "WasInformedBy", t[i + 1]);
  b.add_edge(t[0], "Used", f0);
  const auto g = std::move(b).finish();
  const auto f = testing::random_features(g, 3, 4);
  const auto sum = small_model(g, 3, 2, Aggregation::kSum);
  auto mean = sum;
  mean.aggregation = Aggregation::kMean;
  EXPECT_LT((forward(sum, g, f, false, 0).logits - forward(mean, g, f, false, 0).logits)
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(RGCN, PermutationInvariant) {
  const auto g = testing::tiny_graph(5, 14);
  const auto f = testing::random_features(g, 4, 5);
  const auto model = small_model(g, 4, 2, Aggregation::kMean);
  const auto base = forward(model, g, f, false, 0).logits;
  Rng rng(8);
  for (int round = 0; round < 5; ++round) {
    // Rebuild with every type's nodes inserted in a shuffled order.
    GraphBuilder b;
    std::map<std::string, std::vector<NodeRef>> refs;
    FeatureSet pf;
    pf.schema = f.schema;
    for (const auto& type : g.node_types()) {
      const auto& ids = g.nodes(type).ids;
      std::vector<std::size_t> order(ids.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
      refs[type].resize(ids.size());
      Eigen::MatrixXd rows(static_cast<Eigen::Index>(ids.size()), f.by_type.at(type).cols());
      for (std::size_t k = 0; k < order.size(); ++k) {
        refs[type][order[k]] = b.add_node(type, ids[order[k]]);
        rows.row(static_cast<Eigen::Index>(k)) = f.by_type.at(type).row(static_cast<Eigen::Index>(order[k]));
      }
      pf.by_type[type] = rows;
    }
    for (const auto& [rel, edges] : g.relations()) {
      std::vector<std::size_t> order(edges.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
      for (std::size_t e : order)
        b.add_edge(refs[rel.src_type][edges.src[e]], rel.edge_type, refs[rel.dst_type][edges.dst[e]]);
    }
    const auto pg = std::move(b).finish();
    EXPECT_LT((forward(model, pg, pf, false, 0).logits - base).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(RGCN, MeanIgnoresEdgeDuplication) {
  const auto g = testing::tiny_graph(6, 12, false);
  GraphBuilder b;
  std::map<std::string, std::vector<NodeRef>> refs;
  for (const auto& type : g.node_types())
    for (const auto& id : g.nodes(type).ids) refs[type].push_back(b.add_node(type, id));
  for (const auto& [rel, edges] : g.relations())
    for (std::size_t e = 0; e < edges.size(); ++e)
      for (int copy = 0; copy < 2; ++copy)
        b.add_edge(refs[rel.src_type][edges.src[e]], rel.edge_type, refs[rel.dst_type][edges.dst[e]]);
  const auto doubled = std::move(b).finish();
  const auto f = testing::random_features(g, 3, 6);
  auto model = small_model(g, 3, 2, Aggregation::kMean);
  EXPECT_LT((forward(model, g, f, false, 0).logits - forward(model, doubled, f, false, 0).logits)
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
  model.aggregation = Aggregation::kSum;
  EXPECT_GT((forward(model, g, f, false, 0).logits - forward(model, doubled, f, false, 0).logits)
                .cwiseAbs()
                .maxCoeff(),
            1e-6);
}

TEST(RGCN, DropoutOnlyInTraining) {
  const auto g = testing::tiny_graph(7);
  const auto f = testing::random_features(g, 3, 7);
  const auto model = small_model(g, 3, 2, Aggregation::kSum);
  const auto eval_a = forward(model, g, f, false, 1).logits;
  const auto eval_b = forward(model, g, f, false, 2).logits;
  EXPECT_EQ(eval_a, eval_b);
  EXPECT_LT((eval_a - testing::reference_logits(model, g, f)).cwiseAbs().maxCoeff(), 1e-10);
  const auto train_a = forward(model, g, f, true, 1);
  const auto train_b = forward(model, g, f, true, 1);
  EXPECT_EQ(train_a.logits, train_b.logits);
  EXPECT_NE(train_a.logits, eval_a);
  ASSERT_FALSE(train_a.cache.layers[0].dropout_mask.size() == 0);
  const auto& mask = train_a.cache.layers[0].dropout_mask;
  EXPECT_TRUE(((mask.array() == 0.0) || (mask.array() == 2.0)).all());
}

TEST(RGCN, ParameterCount) {
  const auto g = testing::tiny_graph(8);
  const auto model = small_model(g, 5, 2, Aggregation::kSum);
  const std::size_t r = schema_of(g).size();
  // Layer 1: (r + 1) * 5 * 8, layer 2: (r + 1) * 8 * 8, classifier 8 * 2 + 2.
  EXPECT_EQ(model.params.size(), (r + 1) * 40 + (r + 1) * 64 + 18);
  EXPECT_EQ(model.params.classifier_bias, Eigen::VectorXd::Zero(2));
}

TEST(RGCN, GlorotBound) {
  const auto g = testing::tiny_graph(9);
  const auto model = small_model(g, 5, 1, Aggregation::kSum);
  const double bound = std::sqrt(6.0 / 13.0);
  EXPECT_LE(model.params.layers[0].self_weight.cwiseAbs().maxCoeff(), bound);
  EXPECT_EQ(small_model(g, 5, 1, Aggregation::kSum), model);
}

TEST(RGCN, SchemaMismatch) {
  const auto g = testing::tiny_graph(10);
  const auto f = testing::random_features(g, 3, 10);
  auto schema = schema_of(g);
  schema.pop_back();
  const auto model = init_model(schema, 3, {.hidden_dim = 4}, 1);
  EXPECT_THROW(prepare_graph(model, g, f), SchemaMismatch);
  const auto wide = init_model(schema_of(g), 4, {.hidden_dim = 4}, 1);
  EXPECT_THROW(prepare_graph(wide, g, f), SchemaMismatch);
}

TEST(RGCN, InitRejectsZeroDims) {
  const std::vector<CanonicalRelation> schema{{"task", "Used", "file"}};
  EXPECT_THROW(init_model(schema, 0, {}, 1), InvalidArgument);
  EXPECT_THROW(init_model(schema, 3, {.hidden_dim = 0}, 1), InvalidArgument);
  EXPECT_THROW(init_model(schema, 3, {.num_layers = 0}, 1), InvalidArgument);
}

TEST(RGCN, SoftmaxAndCrossEntropyAreStable) {
  const Eigen::Vector2d z(1000.0, -1000.0);
  const auto p = softmax(z);
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
  EXPECT_NEAR(cross_entropy(z, GraphLabel::kBenign), 0.0, 1e-12);
  EXPECT_NEAR(cross_entropy(z, GraphLabel::kAttack), 2000.0, 1e-9);
}

TEST(RGCN, NonFiniteLossThrows) {
  const auto g = testing::tiny_graph(11);
  auto f = testing::random_features(g, 3, 11);
  f.by_type.begin()->second(0, 0) = std::numeric_limits<double>::infinity();
  const auto model = small_model(g, 3, 1, Aggregation::kSum);
  EXPECT_THROW(loss_and_backward(model, g, f, GraphLabel::kAttack, false, 0), std::exception);
}

TEST(Adam, ZeroGradientAndDecayLeaveParameters) {
  const auto g = testing::tiny_graph(12);
  auto model = small_model(g, 3, 1, Aggregation::kSum);
  const auto before = model.params;
  auto state = init_adam(model);
  adam_step(model, model.params.zeros_like(), {.learning_rate = 0.1}, state);
  EXPECT_EQ(model.params, before);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, MovesAgainstGradient) {
  const auto g = testing::tiny_graph(13);
  auto model = small_model(g, 3, 1, Aggregation::kSum);
  for (auto t : model.params.tensors()) t.setOnes();
  auto grad = model.params.zeros_like();
  for (auto t : grad.tensors()) t.setOnes();
  auto state = init_adam(model);
  adam_step(model, grad, {.learning_rate = 0.01}, state);
  for (const auto& t : std::as_const(model.params).tensors())
    EXPECT_TRUE((t.array() < 1.0).all());
}

TEST(Adam, MatchesScalarOracle) {
  // Two coordinates driven by a fixed toy gradient: g = 2 (theta - target).
  const auto g = testing::tiny_graph(14);
  auto model = small_model(g, 3, 1, Aggregation::kSum);
  AdamOptions opts{.learning_rate = 0.05, .weight_decay = 0.01};
  auto state = init_adam(model);
  auto tensors = model.params.tensors();
  const double t0 = tensors[0](0, 0), t1 = tensors.back()(1, 0);
  testing::ScalarAdam a, b;
  double x0 = t0, x1 = t1;
  for (int step = 0; step < 50; ++step) {
    auto grad = model.params.zeros_like();
    auto gt = grad.tensors();
    const auto cur = std::as_const(model.params).tensors();
    gt[0](0, 0) = 2 * (cur[0](0, 0) - 3.0);
    gt.back()(1, 0) = 2 * (cur.back()(1, 0) + 1.0);
    adam_step(model, grad, opts, state);
    x0 = a.step(x0, 2 * (x0 - 3.0), opts.learning_rate, opts.weight_decay);
    x1 = b.step(x1, 2 * (x1 + 1.0), opts.learning_rate, opts.weight_decay);
    const auto now = std::as_const(model.params).tensors();
    EXPECT_NEAR(now[0](0, 0), x0, 1e-12);
    EXPECT_NEAR(now.back()(1, 0), x1, 1e-12);
  }
}

TEST(Names, AggregationAndReadout) {
  EXPECT_EQ(parse_aggregation(to_string(Aggregation::kMean)), Aggregation::kMean);
  EXPECT_EQ(parse_readout(to_string(Readout::kMeanPool)), Readout::kMeanPool);
  EXPECT_THROW(parse_aggregation("max"), InvalidArgument);
}

}  // namespace
}  // namespace provgraph
