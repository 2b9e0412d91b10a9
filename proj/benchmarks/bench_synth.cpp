#include <benchmark/benchmark.h>

#include "provgraph/synth.hpp"

namespace {

void BM_GenerateScenario(benchmark::State& state) {
  provgraph::ScenarioSpec spec;
  spec.vector = provgraph::AttackVector::kSqlInjection;
  spec.scale = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) {
    ++spec.seed;
    benchmark::DoNotOptimize(provgraph::generate_scenario(spec));
  }
}
BENCHMARK(BM_GenerateScenario)->Arg(1)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
