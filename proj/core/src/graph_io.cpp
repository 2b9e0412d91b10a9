#include "provgraph/graph_io.hpp"

#include <array>
#include <fstream>
#include <unordered_map>

#include <zlib.h>

#include "byte_io.hpp"
#include "provgraph/error.hpp"

namespace provgraph {
namespace {

using detail::ByteReader;
using detail::ByteWriter;

constexpr std::array<char, 4> kMagic{'P', 'G', 'R', 'F'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kFlagFeatures = 0x1;
constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 2 + 8 + 8;
constexpr std::uint32_t kNoString = 0xFFFFFFFFu;

class StringTable {
 public:
  std::uint32_t intern(const std::string& s) {
    auto [it, inserted] = index_.emplace(s, static_cast<std::uint32_t>(strings_.size()));
    if (inserted) strings_.push_back(&it->first);
    return it->second;
  }

  void write(ByteWriter& out) const {
    out.put<std::uint32_t>(static_cast<std::uint32_t>(strings_.size()));
    for (const std::string* s : strings_) {
      out.put<std::uint32_t>(static_cast<std::uint32_t>(s->size()));
      out.put_bytes(*s);
    }
  }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<const std::string*> strings_;
};

void write_attribute_block(ByteWriter& out, StringTable& strings,
                           const std::vector<Attributes>& attributes) {
  std::uint32_t non_empty = 0;
  for (const auto& a : attributes) non_empty += a.empty() ? 0 : 1;
  out.put<std::uint32_t>(non_empty);
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i].empty()) continue;
    out.put<std::uint32_t>(static_cast<std::uint32_t>(i));
    out.put<std::uint32_t>(static_cast<std::uint32_t>(attributes[i].size()));
    for (const auto& [k, v] : attributes[i]) {
      out.put<std::uint32_t>(strings.intern(k));
      out.put<std::uint32_t>(strings.intern(v));
    }
  }
}

void begin_section(ByteWriter& out, const char (&tag)[5], std::size_t& length_at) {
  out.put_bytes(std::string_view(tag, 4));
  length_at = out.size();
  out.put<std::uint64_t>(0);
}

void end_section(ByteWriter& out, std::size_t length_at) {
  out.patch_u64(length_at, out.size() - length_at - sizeof(std::uint64_t));
}

std::vector<std::uint8_t> serialize_binary(const HeteroMultigraph& g, const FeatureSet* features) {
  StringTable strings;
  ByteWriter body;
  std::size_t at = 0;

  begin_section(body, "META", at);
  std::uint8_t label = 0;
  if (g.label()) label = *g.label() == GraphLabel::kBenign ? 1 : 2;
  body.put<std::uint8_t>(label);
  body.put<std::uint32_t>(g.scenario() ? strings.intern(*g.scenario()) : kNoString);
  end_section(body, at);

  begin_section(body, "NODE", at);
  body.put<std::uint32_t>(static_cast<std::uint32_t>(g.node_types().size()));
  for (std::size_t t = 0; t < g.node_types().size(); ++t) {
    const NodeTable& table = g.nodes(t);
    body.put<std::uint32_t>(strings.intern(g.node_types()[t]));
    body.put<std::uint32_t>(static_cast<std::uint32_t>(table.size()));
    for (const auto& id : table.ids) body.put<std::uint32_t>(strings.intern(id));
    write_attribute_block(body, strings, table.attributes);
  }
  end_section(body, at);

  begin_section(body, "EDGE", at);
  body.put<std::uint32_t>(static_cast<std::uint32_t>(g.relations().size()));
  for (const auto& [rel, edges] : g.relations()) {
    body.put<std::uint32_t>(strings.intern(rel.src_type));
    body.put<std::uint32_t>(strings.intern(rel.edge_type));
    body.put<std::uint32_t>(strings.intern(rel.dst_type));
    body.put<std::uint64_t>(edges.size());
    body.put_array<std::uint32_t>(edges.src);
    body.put_array<std::uint32_t>(edges.dst);
    write_attribute_block(body, strings, edges.attributes);
  }
  end_section(body, at);

  if (features) {
    begin_section(body, "FEAT", at);
    body.put<std::uint32_t>(static_cast<std::uint32_t>(features->schema.size()));
    for (const auto& name : features->schema) body.put<std::uint32_t>(strings.intern(name));
    body.put<std::uint32_t>(static_cast<std::uint32_t>(features->by_type.size()));
    for (const auto& [type, m] : features->by_type) {
      body.put<std::uint32_t>(strings.intern(type));
      body.put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
      body.put_array<double>(std::span<const double>(rm.data(), static_cast<std::size_t>(rm.size())));
    }
    end_section(body, at);
  }

  ByteWriter raw;
  begin_section(raw, "STRS", at);
  strings.write(raw);
  end_section(raw, at);
  raw.bytes().insert(raw.bytes().end(), body.bytes().begin(), body.bytes().end());

  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.bytes().data(), static_cast<uLong>(raw.size()),
                6) != Z_OK) {
    throw Error(ErrorCode::kIOFailure, "zlib compression failed");
  }
  packed.resize(packed_size);

  ByteWriter out;
  out.put_bytes(std::string_view(kMagic.data(), kMagic.size()));
  out.put<std::uint8_t>(kVersion);
  out.put<std::uint8_t>(features ? kFlagFeatures : 0);
  out.put<std::uint16_t>(0);
  out.put<std::uint64_t>(raw.size());
  out.put<std::uint64_t>(packed.size());
  out.bytes().insert(out.bytes().end(), packed.begin(), packed.end());
  return std::move(out.bytes());
}

std::vector<Attributes> read_attribute_block(ByteReader& in, const std::vector<std::string>& strings,
                                             std::size_t elements) {
  auto string_at = [&](std::uint32_t index) -> const std::string& {
    if (index >= strings.size()) in.fail("string index out of range");
    return strings[index];
  };
  const auto count = in.get<std::uint32_t>("attribute count");
  std::vector<Attributes> out;
  if (count == 0) return out;
  out.resize(elements);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto element = in.get<std::uint32_t>("attribute owner");
    if (element >= elements) in.fail("attribute owner out of range");
    const auto pairs = in.get<std::uint32_t>("attribute pair count");
    for (std::uint32_t p = 0; p < pairs; ++p) {
      const auto& key = string_at(in.get<std::uint32_t>("attribute key"));
      out[element][key] = string_at(in.get<std::uint32_t>("attribute value"));
    }
  }
  return out;
}

GraphBundle deserialize_binary(std::span<const std::uint8_t> bytes) {
  ByteReader header(bytes);
  const std::string magic = header.get_string(4, "magic");
  if (magic != std::string_view(kMagic.data(), kMagic.size())) header.fail("bad magic bytes");
  const auto version = header.get<std::uint8_t>("version");
  if (version != kVersion) header.fail("unsupported version " + std::to_string(version));
  const auto flags = header.get<std::uint8_t>("flags");
  header.get<std::uint16_t>("reserved");
  const auto raw_size = header.get<std::uint64_t>("raw size");
  const auto packed_size = header.get<std::uint64_t>("packed size");
  if (packed_size > header.remaining()) {
    throw CorruptPayload("compressed payload truncated: expected " + std::to_string(packed_size) +
                             " bytes, found " + std::to_string(header.remaining()),
                         bytes.size());
  }
  if (raw_size > (std::uint64_t{1} << 36)) header.fail("implausible payload size");
  auto packed = header.take(packed_size, "payload");

  std::vector<std::uint8_t> raw(raw_size);
  uLongf out_size = static_cast<uLongf>(raw_size);
  const int rc = uncompress(raw.data(), &out_size, packed.data(), static_cast<uLong>(packed.size()));
  if (rc != Z_OK || out_size != raw_size) {
    throw CorruptPayload("compressed payload failed to inflate (zlib code " + std::to_string(rc) + ")",
                         kHeaderSize);
  }

  // Offsets below are relative to the inflated payload.
  ByteReader in(raw);
  std::vector<std::string> strings;
  auto section = [&](const char* tag) {
    const std::string got = in.get_string(4, "section tag");
    if (got != tag) in.fail(std::string("expected section ") + tag + ", found '" + got + "'");
    const auto length = in.get<std::uint64_t>("section length");
    const std::size_t base = in.offset();
    return ByteReader(in.take(length, tag), base);
  };
  auto string_at = [&](ByteReader& r, std::uint32_t index) -> const std::string& {
    if (index >= strings.size()) r.fail("string index out of range");
    return strings[index];
  };

  {
    ByteReader s = section("STRS");
    const auto count = s.get<std::uint32_t>("string count");
    strings.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto length = s.get<std::uint32_t>("string length");
      strings.push_back(s.get_string(length, "string bytes"));
    }
  }

  std::optional<GraphLabel> label;
  std::optional<std::string> scenario;
  {
    ByteReader s = section("META");
    const auto l = s.get<std::uint8_t>("label");
    if (l > 2) s.fail("invalid label");
    if (l == 1) label = GraphLabel::kBenign;
    if (l == 2) label = GraphLabel::kAttack;
    const auto sc = s.get<std::uint32_t>("scenario");
    if (sc != kNoString) scenario = string_at(s, sc);
  }

  GraphBuilder builder;
  std::unordered_map<std::string, std::size_t> type_sizes;
  {
    ByteReader s = section("NODE");
    const auto types = s.get<std::uint32_t>("node type count");
    for (std::uint32_t t = 0; t < types; ++t) {
      const std::string& type = string_at(s, s.get<std::uint32_t>("node type"));
      const auto count = s.get<std::uint32_t>("node count");
      std::vector<std::uint32_t> ids(count);
      s.get_array<std::uint32_t>(ids, "node ids");
      auto attrs = read_attribute_block(s, strings, count);
      for (std::uint32_t v = 0; v < count; ++v) {
        if (ids[v] >= strings.size()) s.fail("node id index out of range");
        if (attrs.empty()) {
          builder.add_node_unchecked(type, strings[ids[v]]);
        } else {
          builder.add_node_unchecked(type, strings[ids[v]], std::move(attrs[v]));
        }
      }
      type_sizes[type] = count;
    }
  }
  {
    ByteReader s = section("EDGE");
    const auto relations = s.get<std::uint32_t>("relation count");
    for (std::uint32_t r = 0; r < relations; ++r) {
      CanonicalRelation rel;
      rel.src_type = string_at(s, s.get<std::uint32_t>("relation source type"));
      rel.edge_type = string_at(s, s.get<std::uint32_t>("relation edge type"));
      rel.dst_type = string_at(s, s.get<std::uint32_t>("relation destination type"));
      const auto count = s.get<std::uint64_t>("edge count");
      if (count > s.remaining() / 8) s.fail("edge count exceeds section size");
      std::vector<std::uint32_t> src(count), dst(count);
      s.get_array<std::uint32_t>(src, "edge sources");
      s.get_array<std::uint32_t>(dst, "edge destinations");
      auto attrs = read_attribute_block(s, strings, count);
      const std::size_t src_n = type_sizes.count(rel.src_type) ? type_sizes[rel.src_type] : 0;
      const std::size_t dst_n = type_sizes.count(rel.dst_type) ? type_sizes[rel.dst_type] : 0;
      const auto handle = builder.relation(rel);
      builder.reserve(handle, count);
      for (std::size_t e = 0; e < count; ++e) {
        if (src[e] >= src_n || dst[e] >= dst_n) s.fail("edge endpoint out of range");
        if (attrs.empty()) {
          builder.add_edge(handle, src[e], dst[e]);
        } else {
          builder.add_edge(handle, src[e], dst[e], std::move(attrs[e]));
        }
      }
    }
  }

  std::optional<FeatureSet> features;
  if (flags & kFlagFeatures) {
    ByteReader s = section("FEAT");
    FeatureSet f;
    const auto columns = s.get<std::uint32_t>("feature columns");
    for (std::uint32_t c = 0; c < columns; ++c) {
      f.schema.push_back(string_at(s, s.get<std::uint32_t>("feature column name")));
    }
    const auto types = s.get<std::uint32_t>("feature type count");
    for (std::uint32_t t = 0; t < types; ++t) {
      const std::string& type = string_at(s, s.get<std::uint32_t>("feature node type"));
      const auto rows = s.get<std::uint64_t>("feature rows");
      if (columns > 0 && rows > s.remaining() / (8 * columns)) s.fail("feature block truncated");
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(
          static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(columns));
      s.get_array<double>(std::span<double>(m.data(), static_cast<std::size_t>(m.size())),
                          "feature values");
      f.by_type.emplace(type, Eigen::MatrixXd(m));
    }
    features = std::move(f);
  }
  if (!in.done()) in.fail("trailing bytes after last section");

  GraphBundle bundle{std::move(builder).finish(), std::move(features)};
  bundle.graph.set_label(label);
  bundle.graph.set_scenario(scenario);
  return bundle;
}

}  // namespace

nlohmann::json graph_to_json(const HeteroMultigraph& g) {
  using nlohmann::json;
  json nodes = json::object();
  json node_attributes = json::object();
  for (std::size_t t = 0; t < g.node_types().size(); ++t) {
    const NodeTable& table = g.nodes(t);
    nodes[g.node_types()[t]] = table.ids;
    json attrs = json::object();
    for (std::size_t v = 0; v < table.attributes.size(); ++v) {
      if (!table.attributes[v].empty()) attrs[std::to_string(v)] = table.attributes[v];
    }
    if (!attrs.empty()) node_attributes[g.node_types()[t]] = std::move(attrs);
  }
  json relations = json::array();
  for (const auto& [rel, edges] : g.relations()) {
    json list = json::array();
    for (std::size_t e = 0; e < edges.size(); ++e) list.push_back({edges.src[e], edges.dst[e]});
    json entry = {{"src_type", rel.src_type},
                  {"edge_type", rel.edge_type},
                  {"dst_type", rel.dst_type},
                  {"edges", std::move(list)}};
    json attrs = json::object();
    for (std::size_t e = 0; e < edges.attributes.size(); ++e) {
      if (!edges.attributes[e].empty()) attrs[std::to_string(e)] = edges.attributes[e];
    }
    if (!attrs.empty()) entry["edge_attributes"] = std::move(attrs);
    relations.push_back(std::move(entry));
  }
  json out = {{"node_types", g.node_types()},
              {"edge_types", g.edge_types()},
              {"nodes", std::move(nodes)},
              {"relations", std::move(relations)},
              {"label", g.label() ? json(to_string(*g.label())) : json(nullptr)},
              {"scenario", g.scenario() ? json(*g.scenario()) : json(nullptr)}};
  if (!node_attributes.empty()) out["node_attributes"] = std::move(node_attributes);
  return out;
}

HeteroMultigraph graph_from_json(const nlohmann::json& j) {
  try {
    GraphBuilder builder;
    std::unordered_map<std::string, std::size_t> type_sizes;
    const auto& nodes = j.at("nodes");
    const nlohmann::json empty = nlohmann::json::object();
    const auto& node_attributes = j.contains("node_attributes") ? j.at("node_attributes") : empty;
    for (const auto& type : j.at("node_types")) {
      const std::string name = type.get<std::string>();
      const auto& ids = nodes.at(name);
      const nlohmann::json* attrs =
          node_attributes.contains(name) ? &node_attributes.at(name) : nullptr;
      for (std::size_t v = 0; v < ids.size(); ++v) {
        const std::string key = std::to_string(v);
        if (attrs && attrs->contains(key)) {
          builder.add_node_unchecked(name, ids[v].get<std::string>(),
                                     attrs->at(key).get<Attributes>());
        } else {
          builder.add_node_unchecked(name, ids[v].get<std::string>());
        }
      }
      type_sizes[name] = ids.size();
    }
    for (const auto& entry : j.at("relations")) {
      CanonicalRelation rel{entry.at("src_type").get<std::string>(),
                            entry.at("edge_type").get<std::string>(),
                            entry.at("dst_type").get<std::string>()};
      const auto handle = builder.relation(rel);
      const auto& edges = entry.at("edges");
      const nlohmann::json* attrs =
          entry.contains("edge_attributes") ? &entry.at("edge_attributes") : nullptr;
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto s = edges[e].at(0).get<std::uint32_t>();
        const auto d = edges[e].at(1).get<std::uint32_t>();
        if (s >= type_sizes[rel.src_type] || d >= type_sizes[rel.dst_type]) {
          throw CorruptPayload("edge endpoint out of range in relation " + rel.to_string(), 0);
        }
        const std::string key = std::to_string(e);
        if (attrs && attrs->contains(key)) {
          builder.add_edge(handle, s, d, attrs->at(key).get<Attributes>());
        } else {
          builder.add_edge(handle, s, d);
        }
      }
    }
    HeteroMultigraph g = std::move(builder).finish();
    if (j.contains("label") && !j.at("label").is_null()) {
      g.set_label(parse_graph_label(j.at("label").get<std::string>()));
    }
    if (j.contains("scenario") && !j.at("scenario").is_null()) {
      g.set_scenario(j.at("scenario").get<std::string>());
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptPayload(std::string("graph JSON does not match the schema: ") + e.what(), 0);
  } catch (const InvalidArgument& e) {
    throw CorruptPayload(e.what(), 0);
  }
}

std::vector<std::uint8_t> serialize(const HeteroMultigraph& g, GraphFormat format,
                                    const FeatureSet* features) {
  if (format == GraphFormat::kBinaryCompressed) return serialize_binary(g, features);
  nlohmann::json j = graph_to_json(g);
  if (features) j["features"] = to_json(*features);
  const std::string text = j.dump();
  return {text.begin(), text.end()};
}

GraphBundle deserialize_bundle(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    return deserialize_binary(bytes);
  }
  std::size_t first = 0;
  while (first < bytes.size() && std::isspace(bytes[first])) ++first;
  if (first < bytes.size() && bytes[first] == '{') {
    nlohmann::json j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) throw CorruptPayload("graph JSON is not valid JSON", first);
    GraphBundle bundle{graph_from_json(j), std::nullopt};
    if (j.contains("features")) bundle.features = feature_set_from_json(j.at("features"));
    return bundle;
  }
  throw CorruptPayload("neither PGRF binary nor graph JSON", 0);
}

HeteroMultigraph deserialize(std::span<const std::uint8_t> bytes) {
  return deserialize_bundle(bytes).graph;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOFailure("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IOFailure("error while reading '" + path.string() + "'");
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IOFailure("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IOFailure("error while writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IOFailure("cannot rename '" + tmp.string() + "': " + ec.message());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace provgraph
