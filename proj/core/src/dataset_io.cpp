#include <nlohmann/json.hpp>

#include "provgraph/error.hpp"
#include "provgraph/graph_io.hpp"
#include "provgraph/synth.hpp"

namespace provgraph {

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kManifestFormat = "provgraph-dataset";
constexpr int kManifestVersion = 1;

nlohmann::json brief_stats(const HeteroMultigraph& g) {
  return {{"num_nodes", g.num_nodes()},
          {"num_edges", g.num_edges()},
          {"num_relation_types", g.relations().size()}};
}

}  // namespace

void export_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  if (ds.graph_seeds.size() != ds.graphs.size()) {
    throw InvalidArgument("dataset has " + std::to_string(ds.graphs.size()) + " graphs but " +
                          std::to_string(ds.graph_seeds.size()) + " seeds");
  }
  const std::string vector(to_string(ds.vector));
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IOFailure("cannot create '" + dir.string() + "': " + ec.message());

  nlohmann::json entries = nlohmann::json::array();
  std::size_t per_class[2] = {0, 0};
  std::size_t n_benign = 0;
  std::size_t n_attack = 0;
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    const HeteroMultigraph& g = ds.graphs[i];
    if (!g.label()) throw InvalidArgument("graph " + std::to_string(i) + " has no label");
    const GraphLabel label = *g.label();
    const std::size_t cls = label == GraphLabel::kAttack ? 1 : 0;
    (label == GraphLabel::kAttack ? n_attack : n_benign) += 1;
    const std::string rel = vector + "/" + std::string(to_string(label)) + "/" +
                            std::to_string(per_class[cls]++) + ".pgrf";
    const auto path = dir / rel;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IOFailure("cannot create '" + path.parent_path().string() + "': " + ec.message());
    write_file_atomic(path, serialize(g, GraphFormat::kBinaryCompressed));
    entries.push_back({{"index", i},
                       {"file", rel},
                       {"label", to_string(label)},
                       {"seed", ds.graph_seeds[i]},
                       {"stats", brief_stats(g)}});
  }
  const nlohmann::json manifest{{"format", kManifestFormat},
                                {"version", kManifestVersion},
                                {"vector", vector},
                                {"seed", ds.seed},
                                {"jitter", ds.jitter},
                                {"scale", ds.scale},
                                {"n_benign", n_benign},
                                {"n_attack", n_attack},
                                {"graphs", std::move(entries)}};
  write_file_atomic(dir / kManifestName, manifest.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / kManifestName;
  const auto bytes = read_file_bytes(manifest_path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedInput("manifest '" + manifest_path.string() + "': " + e.what());
  }
  try {
    if (manifest.value("format", std::string()) != kManifestFormat) {
      throw ManifestMismatch("'" + manifest_path.string() + "' is not a dataset manifest");
    }
    Dataset ds;
    ds.vector = parse_attack_vector(manifest.at("vector").get<std::string>());
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    ds.jitter = manifest.at("jitter").get<double>();
    ds.scale = manifest.at("scale").get<double>();
    for (const auto& entry : manifest.at("graphs")) {
      const auto file = entry.at("file").get<std::string>();
      HeteroMultigraph g = deserialize(read_file_bytes(dir / file));
      const nlohmann::json expected = entry.at("stats");
      if (brief_stats(g) != expected) {
        throw ManifestMismatch(file + ": manifest stats " + expected.dump() +
                               " disagree with recomputed " + brief_stats(g).dump());
      }
      const GraphLabel label = parse_graph_label(entry.at("label").get<std::string>());
      if (g.label() != label) {
        throw ManifestMismatch(file + ": label disagrees with manifest");
      }
      ds.graph_seeds.push_back(entry.at("seed").get<std::uint64_t>());
      ds.graphs.push_back(std::move(g));
    }
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestMismatch("manifest '" + manifest_path.string() + "': " + e.what());
  }
}

}  // namespace provgraph
