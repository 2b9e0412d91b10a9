#include <benchmark/benchmark.h>

#include "provgraph/features.hpp"
#include "provgraph/rgcn.hpp"
#include "provgraph/synth.hpp"

namespace {

struct Fixture {
  provgraph::RGCNModel model;
  provgraph::PreparedGraph graph;
};

Fixture make(double scale, provgraph::Aggregation agg) {
  provgraph::ScenarioSpec spec;
  spec.vector = provgraph::AttackVector::kXssStored;
  spec.class_label = provgraph::GraphLabel::kAttack;
  spec.seed = 3;
  spec.scale = scale;
  const auto g = provgraph::generate_scenario(spec);
  std::vector<provgraph::CanonicalRelation> schema;
  for (const auto& [rel, _] : g.relations()) schema.push_back(rel);
  provgraph::FeatureOptions fo;
  fo.mode = provgraph::FeatureMode::kDegree;
  const auto feats = provgraph::node_features(g, schema, fo);
  provgraph::ModelConfig c;
  c.aggregation = agg;
  Fixture f{provgraph::init_model(schema, feats.dim(), c, 1), {}};
  f.graph = provgraph::prepare_graph(f.model, g, feats);
  return f;
}

void BM_Forward(benchmark::State& state) {
  const auto f = make(static_cast<double>(state.range(0)) / 1000.0, provgraph::Aggregation::kSum);
  for (auto _ : state) benchmark::DoNotOptimize(provgraph::forward(f.model, f.graph, false, 0));
  state.counters["nodes"] = static_cast<double>(f.graph.num_nodes);
}
BENCHMARK(BM_Forward)->Arg(5)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const auto f = make(static_cast<double>(state.range(0)) / 1000.0, provgraph::Aggregation::kMean);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        provgraph::loss_and_backward(f.model, f.graph, provgraph::GraphLabel::kAttack, true, 1));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(5)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace
