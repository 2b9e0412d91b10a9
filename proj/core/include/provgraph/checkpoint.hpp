#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "provgraph/rgcn.hpp"

namespace provgraph {

// Checkpoint layout:
//
//   "PGCK" | header_length u32 | JSON header (header_length bytes)
//   | parameters as little-endian f64, tensor by tensor in
//     Parameters::tensors() order, each column-major
//
// The header records schema, feature columns, dimensions, aggregation,
// readout, dropout rate, the tensor shapes and the model metadata. Reloading
// reproduces every parameter bit for bit.
std::vector<std::uint8_t> serialize_model(const RGCNModel& model);
// Throws CorruptPayload on a damaged or truncated blob.
RGCNModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_checkpoint(const RGCNModel& model, const std::filesystem::path& path);
RGCNModel load_checkpoint(const std::filesystem::path& path);

}  // namespace provgraph
