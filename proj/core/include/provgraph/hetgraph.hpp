#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "provgraph/prov_document.hpp"

namespace provgraph {

// (source node type, edge type, destination node type). The unit of
// heterogeneity: every edge is stored under exactly one of these.
struct CanonicalRelation {
  std::string src_type;
  std::string edge_type;
  std::string dst_type;

  auto operator<=>(const CanonicalRelation&) const = default;
  bool operator==(const CanonicalRelation&) const = default;

  // "(src, edge, dst)"
  std::string to_string() const;
  // "src|edge|dst", used in column names and file formats.
  std::string key() const;
  static CanonicalRelation from_key(std::string_view key);
};

enum class GraphLabel { kBenign, kAttack };

std::string_view to_string(GraphLabel label);
GraphLabel parse_graph_label(std::string_view text);

struct NodeTable {
  std::vector<std::string> ids;
  // Either empty (no node of this type carries attributes) or ids.size().
  std::vector<Attributes> attributes;

  std::size_t size() const { return ids.size(); }
  bool operator==(const NodeTable&) const = default;
};

// Edges of one canonical relation as parallel index arrays into the source
// and destination type's node tables. Parallel edges and self-loops are kept.
struct EdgeList {
  std::vector<std::uint32_t> src;
  std::vector<std::uint32_t> dst;
  // Either empty or src.size().
  std::vector<Attributes> attributes;

  std::size_t size() const { return src.size(); }
  bool operator==(const EdgeList&) const = default;
};

// Directed, typed multigraph. Immutable once produced by GraphBuilder,
// build(), merge() or deserialize(); node types, edge types and relations are
// kept in lexicographic order.
class HeteroMultigraph {
 public:
  const std::vector<std::string>& node_types() const { return node_types_; }
  const std::vector<std::string>& edge_types() const { return edge_types_; }
  const std::map<CanonicalRelation, EdgeList>& relations() const { return relations_; }

  std::optional<std::size_t> node_type_index(std::string_view type) const;
  const NodeTable& nodes(std::size_t type_index) const { return nodes_[type_index]; }
  const NodeTable& nodes(std::string_view type) const;

  std::size_t num_nodes() const;
  std::size_t num_edges() const;

  // Offset of each node type in the concatenated (global) node order.
  std::vector<std::size_t> type_offsets() const;

  std::optional<GraphLabel> label() const { return label_; }
  const std::optional<std::string>& scenario() const { return scenario_; }
  void set_label(std::optional<GraphLabel> label) { label_ = label; }
  void set_scenario(std::optional<std::string> scenario) { scenario_ = std::move(scenario); }

  bool operator==(const HeteroMultigraph&) const = default;

 private:
  friend class GraphBuilder;

  std::vector<std::string> node_types_;
  std::vector<std::string> edge_types_;
  std::vector<NodeTable> nodes_;
  std::map<CanonicalRelation, EdgeList> relations_;
  std::optional<GraphLabel> label_;
  std::optional<std::string> scenario_;
};

struct NodeRef {
  std::string type;
  std::uint32_t index = 0;
};

// Incremental construction. Node ids are unique across the whole graph.
class GraphBuilder {
 public:
  using RelationHandle = std::size_t;

  // Throws IdCollision when the id already exists.
  NodeRef add_node(std::string_view type, std::string id, Attributes attributes = {});
  // Bulk variant without id lookups; ids must be unique (not checked).
  std::uint32_t add_node_unchecked(std::string_view type, std::string id);
  std::uint32_t add_node_unchecked(std::string_view type, std::string id, Attributes attributes);

  std::optional<NodeRef> find(const std::string& id) const;
  std::size_t count(std::string_view type) const;

  RelationHandle relation(const CanonicalRelation& relation);
  void reserve(RelationHandle handle, std::size_t edges);
  void add_edge(RelationHandle handle, std::uint32_t src, std::uint32_t dst);
  void add_edge(RelationHandle handle, std::uint32_t src, std::uint32_t dst,
                Attributes attributes);
  void add_edge(const NodeRef& src, std::string_view edge_type, const NodeRef& dst,
                Attributes attributes = {});

  HeteroMultigraph finish() &&;

 private:
  std::size_t type_slot(std::string_view type);

  std::vector<std::string> type_names_;
  std::vector<NodeTable> tables_;
  std::unordered_map<std::string, std::size_t> type_lookup_;
  std::unordered_map<std::string, NodeRef> id_lookup_;
  std::vector<CanonicalRelation> relation_keys_;
  std::vector<EdgeList> relation_edges_;
  std::map<CanonicalRelation, std::size_t> relation_lookup_;
};

struct GraphStats {
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  std::size_t num_relation_types = 0;
  std::map<std::string, std::size_t> node_type_histogram;
  std::map<std::string, std::size_t> edge_type_histogram;
  std::map<CanonicalRelation, std::size_t> relation_histogram;

  bool operator==(const GraphStats&) const = default;
};

struct BuildOptions {
  DanglingPolicy dangling = DanglingPolicy::kSynthesize;
  // Receives cycle and dangling-endpoint notes when set.
  std::vector<std::string>* warnings = nullptr;
};

// Node order within a type follows first appearance in the document.
// Throws DanglingEndpoint only under DanglingPolicy::kFail.
HeteroMultigraph build(const ProvDocument& doc, const BuildOptions& options = {});

GraphStats stats(const HeteroMultigraph& g);
nlohmann::json to_json(const GraphStats& s);

enum class MergeMode {
  kStrict,     // ids must already be unique across inputs; IdCollision otherwise
  kNamespace,  // ids become "g<input index>/<id>"
};

// Disjoint union. Labels: ATTACK if any input is an attack graph, else
// BENIGN if any input is labelled, else none.
HeteroMultigraph merge(std::span<const HeteroMultigraph> graphs,
                       MergeMode mode = MergeMode::kStrict);

}  // namespace provgraph
