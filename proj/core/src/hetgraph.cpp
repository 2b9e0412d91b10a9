#include "provgraph/hetgraph.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "provgraph/error.hpp"

namespace provgraph {

std::string CanonicalRelation::to_string() const {
  return "(" + src_type + ", " + edge_type + ", " + dst_type + ")";
}

std::string CanonicalRelation::key() const {
  return src_type + "|" + edge_type + "|" + dst_type;
}

CanonicalRelation CanonicalRelation::from_key(std::string_view key) {
  const auto a = key.find('|');
  const auto b = a == std::string_view::npos ? a : key.find('|', a + 1);
  if (a == std::string_view::npos || b == std::string_view::npos) {
    throw InvalidArgument("relation key '" + std::string(key) + "' is not 'src|edge|dst'");
  }
  return {std::string(key.substr(0, a)), std::string(key.substr(a + 1, b - a - 1)),
          std::string(key.substr(b + 1))};
}

std::string_view to_string(GraphLabel label) {
  return label == GraphLabel::kAttack ? "attack" : "benign";
}

GraphLabel parse_graph_label(std::string_view text) {
  if (text == "attack" || text == "ATTACK") return GraphLabel::kAttack;
  if (text == "benign" || text == "BENIGN") return GraphLabel::kBenign;
  throw InvalidArgument("unknown graph label '" + std::string(text) + "'");
}

std::optional<std::size_t> HeteroMultigraph::node_type_index(std::string_view type) const {
  auto it = std::lower_bound(node_types_.begin(), node_types_.end(), type);
  if (it == node_types_.end() || *it != type) return std::nullopt;
  return static_cast<std::size_t>(it - node_types_.begin());
}

const NodeTable& HeteroMultigraph::nodes(std::string_view type) const {
  auto index = node_type_index(type);
  if (!index) throw InvalidArgument("graph has no node type '" + std::string(type) + "'");
  return nodes_[*index];
}

std::size_t HeteroMultigraph::num_nodes() const {
  return std::accumulate(nodes_.begin(), nodes_.end(), std::size_t{0},
                         [](std::size_t acc, const NodeTable& t) { return acc + t.size(); });
}

std::size_t HeteroMultigraph::num_edges() const {
  std::size_t total = 0;
  for (const auto& [_, edges] : relations_) total += edges.size();
  return total;
}

std::vector<std::size_t> HeteroMultigraph::type_offsets() const {
  std::vector<std::size_t> offsets(nodes_.size() + 1, 0);
  for (std::size_t t = 0; t < nodes_.size(); ++t) offsets[t + 1] = offsets[t] + nodes_[t].size();
  return offsets;
}

// --- GraphBuilder -----------------------------------------------------------

std::size_t GraphBuilder::type_slot(std::string_view type) {
  auto it = type_lookup_.find(std::string(type));
  if (it != type_lookup_.end()) return it->second;
  const std::size_t slot = type_names_.size();
  type_names_.emplace_back(type);
  tables_.emplace_back();
  type_lookup_.emplace(std::string(type), slot);
  return slot;
}

NodeRef GraphBuilder::add_node(std::string_view type, std::string id, Attributes attributes) {
  if (type.empty()) throw InvalidArgument("node '" + id + "' has an empty type");
  if (id_lookup_.count(id)) throw IdCollision("node id '" + id + "' already present");
  const std::size_t slot = type_slot(type);
  NodeTable& table = tables_[slot];
  const auto index = static_cast<std::uint32_t>(table.size());
  if (!attributes.empty() && table.attributes.size() < table.ids.size()) {
    table.attributes.resize(table.ids.size());
  }
  table.ids.push_back(id);
  if (!table.attributes.empty() || !attributes.empty()) {
    table.attributes.push_back(std::move(attributes));
  }
  NodeRef ref{type_names_[slot], index};
  id_lookup_.emplace(std::move(id), ref);
  return ref;
}

std::uint32_t GraphBuilder::add_node_unchecked(std::string_view type, std::string id) {
  NodeTable& table = tables_[type_slot(type)];
  const auto index = static_cast<std::uint32_t>(table.size());
  table.ids.push_back(std::move(id));
  if (!table.attributes.empty()) table.attributes.emplace_back();
  return index;
}

std::uint32_t GraphBuilder::add_node_unchecked(std::string_view type, std::string id,
                                               Attributes attributes) {
  if (attributes.empty()) return add_node_unchecked(type, std::move(id));
  NodeTable& table = tables_[type_slot(type)];
  const auto index = static_cast<std::uint32_t>(table.size());
  table.attributes.resize(table.ids.size());
  table.ids.push_back(std::move(id));
  table.attributes.push_back(std::move(attributes));
  return index;
}

std::optional<NodeRef> GraphBuilder::find(const std::string& id) const {
  auto it = id_lookup_.find(id);
  if (it == id_lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t GraphBuilder::count(std::string_view type) const {
  auto it = type_lookup_.find(std::string(type));
  return it == type_lookup_.end() ? 0 : tables_[it->second].size();
}

GraphBuilder::RelationHandle GraphBuilder::relation(const CanonicalRelation& relation) {
  auto [it, inserted] = relation_lookup_.emplace(relation, relation_keys_.size());
  if (inserted) {
    relation_keys_.push_back(relation);
    relation_edges_.emplace_back();
  }
  return it->second;
}

void GraphBuilder::reserve(RelationHandle handle, std::size_t edges) {
  relation_edges_[handle].src.reserve(edges);
  relation_edges_[handle].dst.reserve(edges);
}

void GraphBuilder::add_edge(RelationHandle handle, std::uint32_t src, std::uint32_t dst) {
  EdgeList& list = relation_edges_[handle];
  list.src.push_back(src);
  list.dst.push_back(dst);
  if (!list.attributes.empty()) list.attributes.emplace_back();
}

void GraphBuilder::add_edge(RelationHandle handle, std::uint32_t src, std::uint32_t dst,
                            Attributes attributes) {
  EdgeList& list = relation_edges_[handle];
  if (!attributes.empty() && list.attributes.size() < list.src.size()) {
    list.attributes.resize(list.src.size());
  }
  list.src.push_back(src);
  list.dst.push_back(dst);
  if (!list.attributes.empty() || !attributes.empty()) {
    list.attributes.push_back(std::move(attributes));
  }
}

void GraphBuilder::add_edge(const NodeRef& src, std::string_view edge_type, const NodeRef& dst,
                            Attributes attributes) {
  const auto handle = relation({src.type, std::string(edge_type), dst.type});
  add_edge(handle, src.index, dst.index, std::move(attributes));
}

HeteroMultigraph GraphBuilder::finish() && {
  HeteroMultigraph g;
  std::vector<std::size_t> order(type_names_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return type_names_[a] < type_names_[b]; });
  for (std::size_t slot : order) {
    if (tables_[slot].size() == 0) continue;
    g.node_types_.push_back(type_names_[slot]);
    g.nodes_.push_back(std::move(tables_[slot]));
  }

  std::set<std::string> edge_types;
  for (std::size_t r = 0; r < relation_keys_.size(); ++r) {
    EdgeList& edges = relation_edges_[r];
    if (edges.size() == 0) continue;
    const auto& key = relation_keys_[r];
    if (!g.node_type_index(key.src_type) || !g.node_type_index(key.dst_type)) {
      throw InvalidArgument("relation " + key.to_string() + " references a type without nodes");
    }
    edge_types.insert(key.edge_type);
    g.relations_.emplace(key, std::move(edges));
  }
  g.edge_types_.assign(edge_types.begin(), edge_types.end());
  return g;
}

// --- build -----------------------------------------------------------------

namespace {

// Counts nodes lying on directed cycles (non-trivial strongly connected
// components) with an iterative Tarjan pass over the global node order.
std::size_t count_cyclic_nodes(const HeteroMultigraph& g) {
  const auto offsets = g.type_offsets();
  const std::size_t n = offsets.back();
  std::vector<std::vector<std::uint32_t>> adjacency(n);
  for (const auto& [rel, edges] : g.relations()) {
    const std::size_t so = offsets[*g.node_type_index(rel.src_type)];
    const std::size_t dof = offsets[*g.node_type_index(rel.dst_type)];
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto u = static_cast<std::uint32_t>(so + edges.src[e]);
      const auto v = static_cast<std::uint32_t>(dof + edges.dst[e]);
      if (u != v) adjacency[u].push_back(v);
    }
  }
  constexpr std::uint32_t kUnvisited = UINT32_MAX;
  std::vector<std::uint32_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::uint32_t> stack;
  std::vector<std::pair<std::uint32_t, std::size_t>> call;
  std::uint32_t counter = 0;
  std::size_t cyclic = 0;
  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      auto& [v, next] = call.back();
      if (next == 0 && index[v] == kUnvisited) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      if (next < adjacency[v].size()) {
        const std::uint32_t w = adjacency[v][next++];
        if (index[w] == kUnvisited) {
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t size = 0;
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          ++size;
        } while (w != v);
        if (size > 1) cyclic += size;
      }
      const std::uint32_t finished = v;
      call.pop_back();
      if (!call.empty()) {
        const std::uint32_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }
  return cyclic;
}

}  // namespace

HeteroMultigraph build(const ProvDocument& doc, const BuildOptions& options) {
  GraphBuilder builder;
  auto note = [&](std::string line) {
    if (options.warnings) options.warnings->push_back(std::move(line));
  };
  for (const auto& node : doc.nodes) {
    if (builder.find(node.id)) {
      note("DUPLICATE_NODE node '" + node.id + "' declared again; first declaration kept");
      continue;
    }
    builder.add_node(node.node_type.empty() ? "unknown" : node.node_type, node.id,
                     node.attributes);
  }
  std::size_t self_loops = 0;
  for (const auto& edge : doc.edges) {
    std::optional<NodeRef> src = builder.find(edge.src);
    std::optional<NodeRef> dst = builder.find(edge.dst);
    if (!src || !dst) {
      const std::string& missing = !src ? edge.src : edge.dst;
      if (options.dangling == DanglingPolicy::kFail) {
        throw DanglingEndpoint("edge '" + edge.id + "' references undeclared node '" + missing +
                               "'");
      }
      if (options.dangling == DanglingPolicy::kSkip) {
        note("DANGLING_ENDPOINT edge '" + edge.id + "' skipped");
        continue;
      }
      if (!src) src = builder.add_node("unknown", edge.src);
      if (!dst) dst = builder.find(edge.dst);
      if (!dst) dst = builder.add_node("unknown", edge.dst);
      note("DANGLING_ENDPOINT node '" + missing + "' synthesized");
    }
    if (edge.src == edge.dst) ++self_loops;
    builder.add_edge(*src, edge.relation, *dst, edge.attributes);
  }
  HeteroMultigraph g = std::move(builder).finish();
  if (options.warnings) {
    const std::size_t cyclic = count_cyclic_nodes(g);
    if (self_loops > 0 || cyclic > 0) {
      note("CYCLE " + std::to_string(self_loops) + " self-loop(s), " + std::to_string(cyclic) +
           " node(s) on directed cycles");
    }
  }
  return g;
}

GraphStats stats(const HeteroMultigraph& g) {
  GraphStats s;
  for (std::size_t t = 0; t < g.node_types().size(); ++t) {
    s.node_type_histogram[g.node_types()[t]] = g.nodes(t).size();
    s.num_nodes += g.nodes(t).size();
  }
  for (const auto& [rel, edges] : g.relations()) {
    s.relation_histogram[rel] = edges.size();
    s.edge_type_histogram[rel.edge_type] += edges.size();
    s.num_edges += edges.size();
  }
  s.num_relation_types = s.relation_histogram.size();
  return s;
}

nlohmann::json to_json(const GraphStats& s) {
  nlohmann::json relations = nlohmann::json::array();
  for (const auto& [rel, count] : s.relation_histogram) {
    relations.push_back({{"src_type", rel.src_type},
                         {"edge_type", rel.edge_type},
                         {"dst_type", rel.dst_type},
                         {"count", count}});
  }
  return {{"num_nodes", s.num_nodes},
          {"num_edges", s.num_edges},
          {"num_relation_types", s.num_relation_types},
          {"node_types", s.node_type_histogram},
          {"edge_types", s.edge_type_histogram},
          {"relations", std::move(relations)}};
}

HeteroMultigraph merge(std::span<const HeteroMultigraph> graphs, MergeMode mode) {
  GraphBuilder builder;
  std::optional<GraphLabel> label;
  std::optional<std::string> scenario;
  bool scenario_seen = false;
  bool scenario_consistent = true;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const HeteroMultigraph& g = graphs[i];
    if (g.label() == GraphLabel::kAttack || (!label && g.label())) label = g.label();
    if (g.num_nodes() > 0) {
      if (!scenario_seen) {
        scenario = g.scenario();
        scenario_seen = true;
      } else if (scenario != g.scenario()) {
        scenario_consistent = false;
      }
    }
    const std::string prefix = mode == MergeMode::kNamespace ? "g" + std::to_string(i) + "/" : "";
    // Local index of input node -> local index in the merged type table.
    std::vector<std::vector<std::uint32_t>> remap(g.node_types().size());
    for (std::size_t t = 0; t < g.node_types().size(); ++t) {
      const NodeTable& table = g.nodes(t);
      remap[t].resize(table.size());
      for (std::size_t v = 0; v < table.size(); ++v) {
        Attributes attrs = table.attributes.empty() ? Attributes{} : table.attributes[v];
        remap[t][v] = builder.add_node(g.node_types()[t], prefix + table.ids[v], std::move(attrs)).index;
      }
    }
    for (const auto& [rel, edges] : g.relations()) {
      const auto& src_map = remap[*g.node_type_index(rel.src_type)];
      const auto& dst_map = remap[*g.node_type_index(rel.dst_type)];
      const auto handle = builder.relation(rel);
      builder.reserve(handle, edges.size());
      for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges.attributes.empty()) {
          builder.add_edge(handle, src_map[edges.src[e]], dst_map[edges.dst[e]]);
        } else {
          builder.add_edge(handle, src_map[edges.src[e]], dst_map[edges.dst[e]],
                           edges.attributes[e]);
        }
      }
    }
  }
  HeteroMultigraph out = std::move(builder).finish();
  out.set_label(label);
  out.set_scenario(scenario_consistent ? scenario : std::nullopt);
  return out;
}

}  // namespace provgraph
