#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace provgraph {

using Attributes = std::map<std::string, std::string>;

enum class ProvFormat { kW3CProv, kSpadeJson, kUnknown };

enum class ProvLayer { kKernel, kApplication, kUnknown };

std::string_view to_string(ProvFormat format);
std::string_view to_string(ProvLayer layer);

struct NodeRecord {
  std::string id;
  std::string node_type;
  Attributes attributes;
  ProvLayer layer = ProvLayer::kUnknown;

  bool operator==(const NodeRecord&) const = default;
};

struct EdgeRecord {
  std::string id;
  std::string relation;
  std::string src;
  std::string dst;
  Attributes attributes;

  bool operator==(const EdgeRecord&) const = default;
};

// Normalized stream of node and edge records parsed from one provenance log.
// Warnings are "<CODE> <detail>" strings; the CLI prefixes them with "WARN ".
struct ProvDocument {
  ProvFormat format_tag = ProvFormat::kUnknown;
  std::vector<NodeRecord> nodes;
  std::vector<EdgeRecord> edges;
  std::vector<std::string> warnings;

  bool operator==(const ProvDocument&) const = default;

  void warn(std::string_view code, std::string_view detail);
};

// What to do with an edge whose endpoint was never declared as a node.
enum class DanglingPolicy { kSynthesize, kSkip, kFail };

std::string_view to_string(DanglingPolicy policy);
DanglingPolicy parse_dangling_policy(std::string_view text);

// Canonical JSON form of a document; used for byte-level comparisons.
nlohmann::json to_json(const ProvDocument& doc);

}  // namespace provgraph
