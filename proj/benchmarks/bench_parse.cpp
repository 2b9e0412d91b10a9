#include <benchmark/benchmark.h>

#include <string>

#include "provgraph/graph_io.hpp"
#include "provgraph/hetgraph.hpp"
#include "provgraph/prov_parser.hpp"

namespace {

// A W3C document with n activities chained by wasInformedBy and one used
// entity each.
std::string w3c_chain(int n) {
  std::string s = R"({"prefix": {"cf": "http://example.org/cf#"}, "activity": {)";
  for (int i = 0; i < n; ++i) {
    s += (i ? "," : "") + std::string("\"a") + std::to_string(i) +
         R"(": {"prov:type": "task", "cf:pid": {"$": ")" + std::to_string(1000 + i) +
         R"(", "type": "xsd:int"}})";
  }
  s += R"(}, "entity": {)";
  for (int i = 0; i < n; ++i) {
    s += (i ? "," : "") + std::string("\"e") + std::to_string(i) + R"(": {"prov:type": "file"})";
  }
  s += R"(}, "used": {)";
  for (int i = 0; i < n; ++i) {
    s += (i ? "," : "") + std::string("\"u") + std::to_string(i) + R"(": {"prov:activity": "a)" +
         std::to_string(i) + R"(", "prov:entity": "e)" + std::to_string(i) + "\"}";
  }
  s += R"(}, "wasInformedBy": {)";
  for (int i = 1; i < n; ++i) {
    s += (i > 1 ? "," : "") + std::string("\"i") + std::to_string(i) +
         R"(": {"prov:informed": "a)" + std::to_string(i) + R"(", "prov:informant": "a)" +
         std::to_string(i - 1) + "\"}";
  }
  return s + "}}";
}

void BM_ParseW3c(benchmark::State& state) {
  const std::string text = w3c_chain(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(provgraph::parse_prov(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseW3c)->Arg(100)->Arg(2000);

void BM_Build(benchmark::State& state) {
  const auto doc = provgraph::normalize(provgraph::parse_prov(w3c_chain(static_cast<int>(state.range(0)))));
  for (auto _ : state) benchmark::DoNotOptimize(provgraph::build(doc));
}
BENCHMARK(BM_Build)->Arg(100)->Arg(2000);

void BM_SerializeBinary(benchmark::State& state) {
  const auto g = provgraph::build(provgraph::normalize(provgraph::parse_prov(w3c_chain(2000))));
  for (auto _ : state)
    benchmark::DoNotOptimize(provgraph::serialize(g, provgraph::GraphFormat::kBinaryCompressed));
}
BENCHMARK(BM_SerializeBinary);

}  // namespace
