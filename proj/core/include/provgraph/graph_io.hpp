#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "provgraph/feature_set.hpp"
#include "provgraph/hetgraph.hpp"

namespace provgraph {

enum class GraphFormat { kJson, kBinaryCompressed };

// Binary layout (all integers little-endian):
//
//   header   "PGRF" | version u8 (=1) | flags u8 (bit 0: FEAT present)
//            | reserved u16 | raw_size u64 | packed_size u64
//   payload  zlib stream of `packed_size` bytes inflating to `raw_size`
//            bytes holding tagged sections, each
//              tag (4 ASCII bytes) | length u64 | body
//            in the order STRS, META, NODE, EDGE[, FEAT].
//
//   STRS  u32 count, then count x (u32 length, bytes); every string below
//         is a u32 index into this table
//   META  u8 label (0 none, 1 benign, 2 attack), u32 scenario (or 0xFFFFFFFF)
//   NODE  u32 types; per type: u32 name, u32 count, count x u32 id,
//         attribute block
//   EDGE  u32 relations; per relation: u32 src type, u32 edge type,
//         u32 dst type, u64 count, count x u32 src, count x u32 dst,
//         attribute block
//   FEAT  u32 columns, columns x u32 name, u32 types; per type: u32 name,
//         u64 rows, rows*columns f64 in row-major order
//
//   attribute block  u32 n; n x (u32 element index, u32 pairs,
//                    pairs x (u32 key, u32 value))
//
// Serialization is deterministic: equal graphs give identical bytes.
std::vector<std::uint8_t> serialize(const HeteroMultigraph& g, GraphFormat format,
                                    const FeatureSet* features = nullptr);

struct GraphBundle {
  HeteroMultigraph graph;
  std::optional<FeatureSet> features;
};

// Accepts either format (detected from the first bytes). Throws
// CorruptPayload with the failing byte offset.
GraphBundle deserialize_bundle(std::span<const std::uint8_t> bytes);
HeteroMultigraph deserialize(std::span<const std::uint8_t> bytes);

nlohmann::json graph_to_json(const HeteroMultigraph& g);
HeteroMultigraph graph_from_json(const nlohmann::json& j);

// File helpers. Writes go to a temporary sibling and are renamed into place.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace provgraph
