#include "provgraph/prov_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "provgraph/error.hpp"

namespace provgraph {
namespace {

using nlohmann::json;

// PROV-JSON relation keys with their (source role, destination role). The
// source is the subject of the PROV statement ("e wasGeneratedBy a").
struct RelationRoles {
  std::string_view key;
  std::string_view canonical;
  std::string_view src_role;
  std::string_view dst_role;
};

constexpr std::array<RelationRoles, 15> kW3CRelations{{
    {"used", "Used", "activity", "entity"},
    {"wasGeneratedBy", "WasGeneratedBy", "entity", "activity"},
    {"wasInformedBy", "WasInformedBy", "informed", "informant"},
    {"wasDerivedFrom", "WasDerivedFrom", "generatedEntity", "usedEntity"},
    {"wasAssociatedWith", "WasAssociatedWith", "activity", "agent"},
    {"wasAttributedTo", "WasAttributedTo", "entity", "agent"},
    {"actedOnBehalfOf", "ActedOnBehalfOf", "delegate", "responsible"},
    {"wasStartedBy", "WasStartedBy", "activity", "trigger"},
    {"wasEndedBy", "WasEndedBy", "activity", "trigger"},
    {"wasInvalidatedBy", "WasInvalidatedBy", "entity", "activity"},
    {"wasInfluencedBy", "WasInfluencedBy", "influencee", "influencer"},
    {"specializationOf", "SpecializationOf", "specificEntity", "generalEntity"},
    {"alternateOf", "AlternateOf", "alternate1", "alternate2"},
    {"hadMember", "HadMember", "collection", "entity"},
    {"mentionOf", "MentionOf", "specificEntity", "generalEntity"},
}};

// Relations that only exist in SPADE/OPM vocabularies.
constexpr std::array<std::string_view, 3> kSpadeOnlyRelations{
    "WasTriggeredBy", "WasControlledBy", "Edge"};

constexpr std::array<std::string_view, 3> kW3CNodeCategories{"entity", "activity", "agent"};
constexpr std::array<std::string_view, 5> kSpadeNodeCategories{
    "entity", "activity", "agent", "process", "artifact"};

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

const RelationRoles* find_w3c_relation(std::string_view key) {
  for (const auto& r : kW3CRelations) {
    if (r.key == key) return &r;
  }
  return nullptr;
}

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& values, std::string_view v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

// Position of a byte offset as 1-based line and column.
std::string describe_position(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

json parse_json_or_throw(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports the offset one past the offending byte.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw MalformedInput("invalid JSON at " + describe_position(text, at));
  }
}

std::optional<json> try_parse(std::string_view text) {
  json value = json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) return std::nullopt;
  return value;
}

// PROV-JSON typed literals look like {"$": "value", "type": "xsd:string"}.
std::string stringify(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_object() && value.contains("$")) return stringify(value.at("$"));
  return value.dump();
}

std::optional<std::string> type_string(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_object() && value.contains("$")) return stringify(value.at("$"));
  if (value.is_array()) {
    for (const auto& v : value) {
      if (auto s = type_string(v)) return s;
    }
  }
  return std::nullopt;
}

std::string_view local_name(std::string_view key) {
  const auto colon = key.find(':');
  return colon == std::string_view::npos ? key : key.substr(colon + 1);
}

ProvLayer layer_from(const Attributes& attrs) {
  for (const auto& [key, value] : attrs) {
    if (to_lower(local_name(key)) != "layer") continue;
    const std::string v = to_lower(value);
    if (v == "kernel") return ProvLayer::kKernel;
    if (v == "application" || v == "app") return ProvLayer::kApplication;
  }
  return ProvLayer::kUnknown;
}

// Looks up an endpoint role with or without its "prov:" prefix.
const json* find_role(const json& record, std::string_view role) {
  if (!record.is_object()) return nullptr;
  const std::string prefixed = "prov:" + std::string(role);
  if (auto it = record.find(prefixed); it != record.end()) return &*it;
  if (auto it = record.find(std::string(role)); it != record.end()) return &*it;
  return nullptr;
}

std::uint32_t fnv1a(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

std::string hex32(std::uint32_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(8, '0');
  for (int i = 7; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
    v >>= 4;
  }
  return out;
}

void add_w3c_node(ProvDocument& doc, std::string_view category, const std::string& id,
                  const json& record) {
  NodeRecord node;
  node.id = id;
  node.node_type = std::string(category);
  if (record.is_object()) {
    std::optional<std::string> explicit_type;
    for (const auto& [key, value] : record.items()) {
      if (!explicit_type && (key == "prov:type" || key == "cf:type" || key == "type")) {
        explicit_type = type_string(value);
      }
      node.attributes[key] = stringify(value);
    }
    if (explicit_type && !trim(*explicit_type).empty()) node.node_type = *explicit_type;
  } else if (!record.is_null()) {
    doc.warn("MALFORMED_RECORD", std::string(category) + " '" + id + "' is not an object");
  }
  node.layer = layer_from(node.attributes);
  doc.nodes.push_back(std::move(node));
}

void add_w3c_edge(ProvDocument& doc, const RelationRoles& roles, std::string_view key,
                  const std::string& id, const json& record) {
  const json* src = find_role(record, roles.src_role);
  const json* dst = find_role(record, roles.dst_role);
  const std::string src_id = src ? stringify(*src) : std::string();
  const std::string dst_id = dst ? stringify(*dst) : std::string();
  if (src_id.empty() || dst_id.empty()) {
    doc.warn("MISSING_ENDPOINT", std::string(key) + " '" + id + "' lacks prov:" +
                                     std::string(src_id.empty() ? roles.src_role : roles.dst_role));
    return;
  }
  EdgeRecord edge;
  edge.id = id;
  edge.relation = std::string(key);
  edge.src = src_id;
  edge.dst = dst_id;
  for (const auto& [k, value] : record.items()) {
    const std::string_view local = local_name(k);
    if (local == roles.src_role || local == roles.dst_role) continue;
    edge.attributes[k] = stringify(value);
  }
  doc.edges.push_back(std::move(edge));
}

// PROV-JSON allows an id to map to an array of records sharing that id.
template <typename Fn>
void for_each_record(const json& category, Fn&& fn) {
  for (const auto& [id, record] : category.items()) {
    if (record.is_array()) {
      for (const auto& r : record) fn(id, r);
    } else {
      fn(id, record);
    }
  }
}

bool is_spade_record_array(const json& value) {
  if (!value.is_array() || value.empty()) return false;
  return std::all_of(value.begin(), value.end(),
                     [](const json& r) { return r.is_object() && r.contains("type"); });
}

// Splits a line-delimited SPADE stream into records. CamFlow writes one
// object per line, optionally wrapped in "[" ... "]" with trailing commas.
std::optional<json> parse_spade_lines(std::string_view text, std::string* error) {
  json records = json::array();
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    if (!line.empty() && line.front() == '[') line = trim(line.substr(1));
    if (!line.empty() && line.back() == ']') line = trim(line.substr(0, line.size() - 1));
    if (!line.empty() && line.front() == ',') line = trim(line.substr(1));
    if (!line.empty() && line.back() == ',') line = trim(line.substr(0, line.size() - 1));
    if (line.empty()) continue;
    auto value = try_parse(line);
    if (!value || !value->is_object()) {
      if (error) *error = "invalid SPADE record at line " + std::to_string(line_no);
      return std::nullopt;
    }
    records.push_back(std::move(*value));
  }
  return records;
}

std::optional<std::string> spade_node_type(const json& record) {
  auto annotations = record.find("annotations");
  if (annotations != record.end() && annotations->is_object()) {
    for (std::string_view key : {"object_type", "subtype", "type", "cf:type", "prov:type"}) {
      if (auto it = annotations->find(std::string(key)); it != annotations->end()) {
        if (auto s = type_string(*it); s && !trim(*s).empty()) return s;
      }
    }
  }
  return std::nullopt;
}

void collect_spade_attributes(const json& record, Attributes& out) {
  for (const auto& [key, value] : record.items()) {
    if (key == "type" || key == "id" || key == "from" || key == "to") continue;
    if (key == "annotations" && value.is_object()) {
      for (const auto& [k, v] : value.items()) out[k] = stringify(v);
    } else {
      out[key] = stringify(value);
    }
  }
}

bool is_known_relation(std::string_view type) {
  for (const auto& r : kW3CRelations) {
    if (r.canonical == type) return true;
  }
  return contains(kSpadeOnlyRelations, type);
}

}  // namespace

ProvFormat sniff_format(std::string_view text) noexcept {
  try {
    const std::string_view body = trim(text);
    if (body.empty()) return ProvFormat::kUnknown;
    if (auto value = try_parse(body)) {
      if (value->is_array()) {
        return is_spade_record_array(*value) ? ProvFormat::kSpadeJson : ProvFormat::kUnknown;
      }
      if (!value->is_object()) return ProvFormat::kUnknown;
      if (value->empty()) return ProvFormat::kW3CProv;
      bool prov_key = false;
      for (const auto& [key, _] : value->items()) {
        if (contains(kW3CNodeCategories, key) || find_w3c_relation(key) || key == "prefix" ||
            key == "bundle") {
          prov_key = true;
          break;
        }
      }
      if (prov_key) return ProvFormat::kW3CProv;
      if (value->contains("type")) return ProvFormat::kSpadeJson;
      for (const auto& [_, member] : value->items()) {
        if (is_spade_record_array(member)) return ProvFormat::kSpadeJson;
      }
      return ProvFormat::kUnknown;
    }
    if (auto records = parse_spade_lines(body, nullptr)) {
      return is_spade_record_array(*records) ? ProvFormat::kSpadeJson : ProvFormat::kUnknown;
    }
  } catch (...) {
  }
  return ProvFormat::kUnknown;
}

ProvDocument parse_w3c_prov(std::string_view text) {
  const json root = parse_json_or_throw(text);
  if (!root.is_object()) throw MalformedInput("W3C-PROV document must be a JSON object");

  ProvDocument doc;
  doc.format_tag = ProvFormat::kW3CProv;
  for (const auto& [key, category] : root.items()) {
    if (key == "prefix") continue;
    const bool node_category = contains(kW3CNodeCategories, key);
    const RelationRoles* roles = node_category ? nullptr : find_w3c_relation(key);
    if (!node_category && !roles) {
      doc.warn("UNKNOWN_KEY", "top-level key '" + key + "' ignored");
      continue;
    }
    if (!category.is_object()) {
      doc.warn("MALFORMED_CATEGORY", "'" + key + "' is not an object; contents skipped");
      continue;
    }
    if (node_category) {
      for_each_record(category, [&](const std::string& id, const json& record) {
        add_w3c_node(doc, key, id, record);
      });
    } else {
      for_each_record(category, [&](const std::string& id, const json& record) {
        add_w3c_edge(doc, *roles, key, id, record);
      });
    }
  }
  return doc;
}

ProvDocument parse_spade_json(std::string_view text) {
  json records;
  const std::string_view body = trim(text);
  if (auto value = try_parse(body)) {
    if (value->is_array()) {
      records = std::move(*value);
    } else if (value->is_object() && value->contains("type")) {
      records = json::array({std::move(*value)});
    } else if (value->is_object()) {
      for (auto& [_, member] : value->items()) {
        if (member.is_array()) {
          records = member;
          break;
        }
      }
      if (records.is_null()) throw MalformedInput("SPADE document holds no record array");
    } else {
      throw MalformedInput("SPADE document must be an array of records");
    }
  } else {
    std::string error;
    auto lines = parse_spade_lines(body, &error);
    if (!lines) {
      // Prefer the precise JSON diagnostic for single-document input.
      if (body.find('\n') == std::string_view::npos || body.front() == '[') {
        parse_json_or_throw(body);
      }
      throw MalformedInput(error);
    }
    records = std::move(*lines);
  }

  ProvDocument doc;
  doc.format_tag = ProvFormat::kSpadeJson;
  std::unordered_map<std::string, int> synthesized_ids;
  std::size_t ordinal = 0;
  for (const auto& record : records) {
    ++ordinal;
    if (!record.is_object() || !record.contains("type") || !record.at("type").is_string()) {
      doc.warn("UNKNOWN_RECORD", "record " + std::to_string(ordinal) + " has no string 'type'");
      continue;
    }
    const std::string type = record.at("type").get<std::string>();
    const bool has_endpoints = record.contains("from") || record.contains("to");
    if (contains(kSpadeNodeCategories, to_lower(type))) {
      auto id_it = record.find("id");
      const std::string id = id_it != record.end() ? stringify(*id_it) : std::string();
      if (id.empty()) {
        doc.warn("MISSING_ID", type + " record " + std::to_string(ordinal) + " has no id");
        continue;
      }
      NodeRecord node;
      node.id = id;
      node.node_type = spade_node_type(record).value_or(to_lower(type));
      collect_spade_attributes(record, node.attributes);
      node.layer = layer_from(node.attributes);
      doc.nodes.push_back(std::move(node));
      continue;
    }
    if (!has_endpoints && !is_known_relation(type)) {
      doc.warn("UNKNOWN_RECORD", "record " + std::to_string(ordinal) + " of type '" + type +
                                     "' is neither a node nor a relation");
      continue;
    }
    const std::string from = record.contains("from") ? stringify(record.at("from")) : "";
    const std::string to = record.contains("to") ? stringify(record.at("to")) : "";
    if (from.empty() || to.empty()) {
      doc.warn("MISSING_ENDPOINT", type + " record " + std::to_string(ordinal) + " lacks '" +
                                       (from.empty() ? "from" : "to") + "'");
      continue;
    }
    if (!is_known_relation(type)) {
      doc.warn("UNKNOWN_RELATION", "relation type '" + type + "' kept verbatim");
    }
    EdgeRecord edge;
    edge.relation = type;
    edge.src = from;
    edge.dst = to;
    collect_spade_attributes(record, edge.attributes);
    if (auto id_it = record.find("id"); id_it != record.end()) {
      edge.id = stringify(*id_it);
    } else {
      // Content-derived ids keep parsing independent of record order.
      std::string base = type + ":" + from + "->" + to;
      if (!edge.attributes.empty()) {
        base += "@" + hex32(fnv1a(json(edge.attributes).dump()));
      }
      const int n = synthesized_ids[base]++;
      edge.id = n == 0 ? base : base + "#" + std::to_string(n);
    }
    doc.edges.push_back(std::move(edge));
  }
  return doc;
}

ProvDocument parse_prov(std::string_view text, ProvFormat format) {
  if (format == ProvFormat::kUnknown) format = sniff_format(text);
  switch (format) {
    case ProvFormat::kW3CProv: return parse_w3c_prov(text);
    case ProvFormat::kSpadeJson: return parse_spade_json(text);
    case ProvFormat::kUnknown: break;
  }
  // Surface a positional JSON error when there is one.
  if (!try_parse(trim(text)) && !parse_spade_lines(trim(text), nullptr)) {
    parse_json_or_throw(trim(text));
  }
  throw MalformedInput("input is neither W3C-PROV JSON nor SPADE JSON");
}

std::string canonical_node_type(std::string_view raw) {
  std::string_view s = trim(raw);
  const auto colon = s.find(':');
  if (colon != std::string_view::npos && colon > 0 && colon + 1 < s.size()) {
    const std::string_view prefix = s.substr(0, colon);
    if (std::all_of(prefix.begin(), prefix.end(),
                    [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '-'; })) {
      s = s.substr(colon + 1);
    }
  }
  std::string out = to_lower(s);
  return out.empty() ? std::string("unknown") : out;
}

std::string canonical_relation(std::string_view raw) {
  const std::string_view s = trim(raw);
  const std::string lower = to_lower(s);
  for (const auto& r : kW3CRelations) {
    if (to_lower(r.key) == lower) return std::string(r.canonical);
  }
  for (std::string_view r : kSpadeOnlyRelations) {
    if (to_lower(r) == lower) return std::string(r);
  }
  return std::string(s);
}

ProvDocument normalize(const ProvDocument& doc, const NormalizeOptions& options) {
  ProvDocument out;
  out.format_tag = doc.format_tag;
  out.warnings = doc.warnings;

  std::unordered_map<std::string, std::size_t> node_index;
  node_index.reserve(doc.nodes.size());
  for (const auto& raw : doc.nodes) {
    NodeRecord node = raw;
    node.node_type = canonical_node_type(raw.node_type);
    auto [it, inserted] = node_index.emplace(node.id, out.nodes.size());
    if (inserted) {
      out.nodes.push_back(std::move(node));
      continue;
    }
    NodeRecord& existing = out.nodes[it->second];
    std::string detail = "node '" + node.id + "' merged";
    std::size_t conflicts = 0;
    for (auto& [key, value] : node.attributes) {
      auto [a, added] = existing.attributes.emplace(key, value);
      if (!added && a->second != value) {
        a->second = value;
        ++conflicts;
      }
    }
    if (existing.node_type != node.node_type) {
      detail += "; type '" + existing.node_type + "' replaced by '" + node.node_type + "'";
      existing.node_type = node.node_type;
    }
    if (node.layer != ProvLayer::kUnknown) existing.layer = node.layer;
    if (conflicts > 0) {
      detail += "; " + std::to_string(conflicts) + " conflicting attribute(s), last writer kept";
    }
    out.warn("DUPLICATE_NODE", detail);
  }

  std::unordered_set<std::string> edge_ids;
  edge_ids.reserve(doc.edges.size());
  for (const auto& raw : doc.edges) {
    EdgeRecord edge = raw;
    edge.relation = canonical_relation(raw.relation);
    if (!edge_ids.insert(edge.id).second) {
      std::string renamed;
      for (int k = 2;; ++k) {
        renamed = edge.id + "#" + std::to_string(k);
        if (edge_ids.insert(renamed).second) break;
      }
      out.warn("DUPLICATE_EDGE", "edge id '" + edge.id + "' renamed to '" + renamed + "'");
      edge.id = renamed;
    }

    bool keep = true;
    for (const std::string* endpoint : {&edge.src, &edge.dst}) {
      if (node_index.count(*endpoint)) continue;
      switch (options.dangling) {
        case DanglingPolicy::kSynthesize:
          node_index.emplace(*endpoint, out.nodes.size());
          out.nodes.push_back(NodeRecord{*endpoint, "unknown", {}, ProvLayer::kUnknown});
          out.warn("DANGLING_ENDPOINT",
                   "node '" + *endpoint + "' synthesized for edge '" + edge.id + "'");
          break;
        case DanglingPolicy::kSkip:
          if (keep) {
            out.warn("DANGLING_ENDPOINT",
                     "edge '" + edge.id + "' skipped; node '" + *endpoint + "' undeclared");
          }
          keep = false;
          break;
        case DanglingPolicy::kFail:
          out.warn("DANGLING_ENDPOINT",
                   "edge '" + edge.id + "' references undeclared node '" + *endpoint + "'");
          break;
      }
    }
    if (keep) out.edges.push_back(std::move(edge));
  }
  return out;
}

}  // namespace provgraph
