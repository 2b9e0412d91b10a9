#include "provgraph/prov_document.hpp"

#include "provgraph/error.hpp"

namespace provgraph {

std::string_view to_string(ProvFormat format) {
  switch (format) {
    case ProvFormat::kW3CProv: return "w3c";
    case ProvFormat::kSpadeJson: return "spade";
    case ProvFormat::kUnknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(ProvLayer layer) {
  switch (layer) {
    case ProvLayer::kKernel: return "kernel";
    case ProvLayer::kApplication: return "application";
    case ProvLayer::kUnknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(DanglingPolicy policy) {
  switch (policy) {
    case DanglingPolicy::kSynthesize: return "synthesize";
    case DanglingPolicy::kSkip: return "skip";
    case DanglingPolicy::kFail: return "fail";
  }
  return "synthesize";
}

DanglingPolicy parse_dangling_policy(std::string_view text) {
  if (text == "synthesize") return DanglingPolicy::kSynthesize;
  if (text == "skip") return DanglingPolicy::kSkip;
  if (text == "fail") return DanglingPolicy::kFail;
  throw InvalidArgument("unknown dangling policy '" + std::string(text) + "'");
}

void ProvDocument::warn(std::string_view code, std::string_view detail) {
  std::string line(code);
  if (!detail.empty()) {
    line += ' ';
    line += detail;
  }
  warnings.push_back(std::move(line));
}

nlohmann::json to_json(const ProvDocument& doc) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : doc.nodes) {
    nodes.push_back({{"id", n.id},
                     {"node_type", n.node_type},
                     {"layer", to_string(n.layer)},
                     {"attributes", n.attributes}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : doc.edges) {
    edges.push_back({{"id", e.id},
                     {"relation", e.relation},
                     {"src", e.src},
                     {"dst", e.dst},
                     {"attributes", e.attributes}});
  }
  return {{"format", to_string(doc.format_tag)},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"warnings", doc.warnings}};
}

}  // namespace provgraph
