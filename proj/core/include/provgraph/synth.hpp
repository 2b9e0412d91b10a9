#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "provgraph/hetgraph.hpp"

namespace provgraph {

enum class AttackVector { kXssStored, kXssReflected, kXssDom, kClInjection, kSqlInjection, kBruteForce };

// "xss-stored", "xss-reflected", "xss-dom", "cl-injection", "sql-injection",
// "brute-force".
std::string_view to_string(AttackVector vector);
// Accepts the names above as well as the upper-case enum spelling
// ("XSS_STORED").
AttackVector parse_attack_vector(std::string_view text);
const std::vector<AttackVector>& all_attack_vectors();

// Average size of one captured graph for a (vector, class) pair; these are
// the calibration targets of the generator.
struct ScenarioTarget {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t relation_types = 0;
};

ScenarioTarget scenario_target(AttackVector vector, GraphLabel label);

struct ScenarioSpec {
  AttackVector vector = AttackVector::kBruteForce;
  GraphLabel class_label = GraphLabel::kBenign;
  std::uint64_t seed = 0;
  // Node and edge counts are drawn uniformly within +-jitter (fractional) of
  // the target; the relation-type count moves by at most one when jitter > 0.
  double jitter = 0.10;
  // Multiplies the node and edge targets of the web-serving backbone. The
  // brute-force attack graph (a few hundred socket nodes) is never scaled.
  double scale = 1.0;
};

// Deterministic in `spec`. Throws InvalidArgument for jitter outside
// [0, 0.5] or a non-positive scale.
HeteroMultigraph generate_scenario(const ScenarioSpec& spec);

struct Dataset {
  AttackVector vector = AttackVector::kBruteForce;
  std::uint64_t seed = 0;
  double jitter = 0.10;
  double scale = 1.0;
  // Benign block first, then attack block. Every graph carries its label.
  std::vector<HeteroMultigraph> graphs;
  // Per-graph generator seed, parallel to `graphs`.
  std::vector<std::uint64_t> graph_seeds;

  bool operator==(const Dataset&) const = default;
};

struct DatasetOptions {
  double jitter = 0.10;
  double scale = 1.0;
};

// Graph i is generated with seed derive_seed(seed, i).
Dataset generate_dataset(AttackVector vector, std::size_t n_benign, std::size_t n_attack,
                         std::uint64_t seed, const DatasetOptions& options = {});

// Writes `<dir>/<vector>/<class>/<k>.pgrf` (k counts within the class) and
// `<dir>/manifest.json`. Throws IOFailure.
void export_dataset(const Dataset& ds, const std::filesystem::path& dir);

// Throws IOFailure, CorruptPayload / MalformedInput on damaged files and
// ManifestMismatch when a graph disagrees with its manifest entry.
Dataset load_dataset(const std::filesystem::path& dir);

// Relation schema shared by all graphs of the dataset (sorted union).
std::vector<CanonicalRelation> relation_schema(std::span<const HeteroMultigraph> graphs);

}  // namespace provgraph
