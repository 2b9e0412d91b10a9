#include <benchmark/benchmark.h>

#include "provgraph/features.hpp"
#include "provgraph/lobpcg.hpp"
#include "provgraph/synth.hpp"

namespace {

provgraph::HeteroMultigraph backbone(double scale) {
  provgraph::ScenarioSpec spec;
  spec.vector = provgraph::AttackVector::kXssDom;
  spec.seed = 1;
  spec.scale = scale;
  return provgraph::generate_scenario(spec);
}

void BM_LobpcgDiagonal(benchmark::State& state) {
  const auto n = state.range(0);
  const Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(n, 1.0, static_cast<double>(n));
  const provgraph::BlockOperator op = [&](const Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    y = d.asDiagonal() * x;
  };
  const Eigen::MatrixXd x0 = Eigen::MatrixXd::Random(n, 8);
  for (auto _ : state) benchmark::DoNotOptimize(provgraph::lobpcg(op, n, x0));
}
BENCHMARK(BM_LobpcgDiagonal)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SpectralEmbedding(benchmark::State& state) {
  const auto g = backbone(static_cast<double>(state.range(0)) / 1000.0);
  provgraph::SpectralOptions opts;
  opts.dense_threshold = 0;
  for (auto _ : state) benchmark::DoNotOptimize(provgraph::spectral_embedding(g, opts));
  state.counters["nodes"] = static_cast<double>(g.num_nodes());
}
BENCHMARK(BM_SpectralEmbedding)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_DegreeFeatures(benchmark::State& state) {
  const auto g = backbone(0.01);
  for (auto _ : state) benchmark::DoNotOptimize(provgraph::degree_features(g));
}
BENCHMARK(BM_DegreeFeatures);

}  // namespace
