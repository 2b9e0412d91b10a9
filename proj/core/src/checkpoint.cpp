#include "provgraph/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "byte_io.hpp"
#include "provgraph/error.hpp"
#include "provgraph/graph_io.hpp"

namespace provgraph {

namespace {

constexpr char kMagic[4] = {'P', 'G', 'C', 'K'};
constexpr int kVersion = 1;

}  // namespace

std::vector<std::uint8_t> serialize_model(const RGCNModel& model) {
  nlohmann::json schema = nlohmann::json::array();
  for (const auto& r : model.schema) schema.push_back(r.key());
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& t : model.params.tensors()) shapes.push_back({t.rows(), t.cols()});
  const nlohmann::json header{{"format", "provgraph-rgcn"},
                              {"version", kVersion},
                              {"schema", schema},
                              {"feature_columns", model.feature_columns},
                              {"feature_dim", model.feature_dim},
                              {"hidden_dim", model.hidden_dim},
                              {"num_layers", model.num_layers()},
                              {"aggregation", to_string(model.aggregation)},
                              {"readout", to_string(model.readout)},
                              {"dropout", model.dropout_rate},
                              {"shapes", shapes},
                              {"metadata", model.metadata}};
  const std::string text = header.dump();

  detail::ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put(static_cast<std::uint32_t>(text.size()));
  w.put_bytes(text);
  for (const auto& t : model.params.tensors()) {
    // Ref<const MatrixXd> of a full matrix is contiguous column-major storage.
    w.put_array(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
  }
  return std::move(w.bytes());
}

RGCNModel deserialize_model(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (r.get_string(4, "magic") != std::string_view(kMagic, 4)) {
    throw CorruptPayload("not a model checkpoint (bad magic)", 0);
  }
  const auto header_length = r.get<std::uint32_t>("header length");
  const std::size_t header_offset = r.offset();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.get_string(header_length, "header"));
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptPayload(std::string("checkpoint header is not valid JSON: ") + e.what(),
                         header_offset);
  }

  RGCNModel model;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
  try {
    if (header.at("version").get<int>() != kVersion) {
      throw CorruptPayload("unsupported checkpoint version", header_offset);
    }
    for (const auto& key : header.at("schema")) {
      model.schema.push_back(CanonicalRelation::from_key(key.get<std::string>()));
    }
    model.feature_columns = header.at("feature_columns").get<std::vector<std::string>>();
    model.feature_dim = header.at("feature_dim").get<std::size_t>();
    model.hidden_dim = header.at("hidden_dim").get<std::size_t>();
    model.aggregation = parse_aggregation(header.at("aggregation").get<std::string>());
    model.readout = parse_readout(header.at("readout").get<std::string>());
    model.dropout_rate = header.at("dropout").get<double>();
    model.metadata = header.value("metadata", nlohmann::json::object());
    const auto layers = header.at("num_layers").get<std::size_t>();
    for (const auto& s : header.at("shapes")) {
      shapes.emplace_back(s.at(0).get<Eigen::Index>(), s.at(1).get<Eigen::Index>());
    }
    if (shapes.size() != layers * (model.schema.size() + 1) + 2) {
      throw CorruptPayload("checkpoint tensor count does not match its layer layout", header_offset);
    }
    model.params.layers.resize(layers);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptPayload(std::string("checkpoint header is incomplete: ") + e.what(), header_offset);
  } catch (const InvalidArgument& e) {
    throw CorruptPayload(std::string("checkpoint header is invalid: ") + e.what(), header_offset);
  }

  std::size_t next = 0;
  auto read_tensor = [&](Eigen::MatrixXd& m) {
    const auto [rows, cols] = shapes[next++];
    if (rows < 0 || cols < 0) r.fail("negative tensor shape");
    m.resize(rows, cols);
    r.get_array(std::span<double>(m.data(), static_cast<std::size_t>(m.size())), "tensor");
  };
  for (auto& layer : model.params.layers) {
    read_tensor(layer.self_weight);
    layer.relation_weights.resize(model.schema.size());
    for (auto& w : layer.relation_weights) read_tensor(w);
  }
  read_tensor(model.params.classifier_weight);
  Eigen::MatrixXd bias;
  read_tensor(bias);
  model.params.classifier_bias = Eigen::Map<Eigen::VectorXd>(bias.data(), bias.size());
  if (!r.done()) r.fail("trailing bytes after the last tensor");
  return model;
}

void save_checkpoint(const RGCNModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IOFailure("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  write_file_atomic(path, serialize_model(model));
}

RGCNModel load_checkpoint(const std::filesystem::path& path) {
  return deserialize_model(read_file_bytes(path));
}

}  // namespace provgraph
