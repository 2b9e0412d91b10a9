#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "provgraph/checkpoint.hpp"
#include "provgraph/error.hpp"
#include "provgraph/features.hpp"
#include "provgraph/graph_io.hpp"
#include "provgraph/hetgraph.hpp"
#include "provgraph/metrics.hpp"
#include "provgraph/prov_parser.hpp"
#include "provgraph/report.hpp"
#include "provgraph/synth.hpp"
#include "provgraph/trainer.hpp"

namespace provgraph::cli {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedInput:
    case ErrorCode::kDanglingEndpoint:
    case ErrorCode::kCorruptPayload:
    case ErrorCode::kIdCollision:
    case ErrorCode::kUnknownRelation:
    case ErrorCode::kSchemaMismatch:
    case ErrorCode::kManifestMismatch:
      return kInputFormat;
    case ErrorCode::kIOFailure:
      return kIO;
    case ErrorCode::kNonFiniteLoss:
    case ErrorCode::kBreakdown:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kInvalidBlock:
      return kNumeric;
    case ErrorCode::kInvalidFoldCount:
    case ErrorCode::kInvalidArgument:
      return kUsage;
  }
  return kUsage;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "WARN " << w << "\n";
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

nlohmann::json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedInput("'" + path.string() + "': " + e.what());
  }
}

ProvFormat prov_format_from_flag(const std::string& flag) {
  if (flag == "w3c") return ProvFormat::kW3CProv;
  if (flag == "spade") return ProvFormat::kSpadeJson;
  return ProvFormat::kUnknown;
}

HeteroMultigraph build_from_prov(const std::string& text, ProvFormat format,
                                 DanglingPolicy dangling, std::ostream& err) {
  ProvDocument doc = parse_prov(text, format);
  print_warnings(doc.warnings, err);
  NormalizeOptions norm;
  norm.dangling = dangling;
  ProvDocument normalized = normalize(doc, norm);
  std::vector<std::string> fresh(normalized.warnings.begin() +
                                     static_cast<std::ptrdiff_t>(doc.warnings.size()),
                                 normalized.warnings.end());
  print_warnings(fresh, err);
  std::vector<std::string> build_warnings;
  BuildOptions bo;
  bo.dangling = dangling;
  bo.warnings = &build_warnings;
  HeteroMultigraph g = build(normalized, bo);
  print_warnings(build_warnings, err);
  return g;
}

// Graph files (PGRF or graph JSON) and raw provenance logs are both accepted
// wherever a graph is read.
GraphBundle load_graph_input(const fs::path& path, const std::string& format,
                             DanglingPolicy dangling, std::ostream& err) {
  const auto bytes = read_file_bytes(path);
  const bool binary = bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'G' && bytes[2] == 'R' &&
                      bytes[3] == 'F';
  if (format == "graph" || (format == "auto" && binary)) return deserialize_bundle(bytes);
  const std::string text(bytes.begin(), bytes.end());
  if (format == "auto") {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_object() && j.contains("relations") && j.contains("node_types")) {
      return deserialize_bundle(bytes);
    }
  }
  return {build_from_prov(text, prov_format_from_flag(format), dangling, err), std::nullopt};
}

std::string stats_line(const HeteroMultigraph& g) {
  return "nodes " + std::to_string(g.num_nodes()) + " edges " + std::to_string(g.num_edges()) +
         " relation_types " + std::to_string(g.relations().size());
}

void write_output(const std::optional<std::string>& path, const std::string& text,
                  std::ostream& out) {
  if (path) {
    write_file_atomic(*path, text);
  } else {
    out << text;
  }
}

const std::map<std::string, DanglingPolicy> kDanglingMap{
    {"synthesize", DanglingPolicy::kSynthesize},
    {"skip", DanglingPolicy::kSkip},
    {"fail", DanglingPolicy::kFail}};

std::map<std::string, AttackVector> vector_map() {
  std::map<std::string, AttackVector> m;
  for (auto v : all_attack_vectors()) m.emplace(std::string(to_string(v)), v);
  return m;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Provenance graph toolkit: convert audit logs, build datasets, train and "
               "evaluate graph classifiers.",
               "provgraph"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::function<void()> action;

  // convert
  struct {
    std::string in, out, format = "auto", dangling = "synthesize", out_format = "binary";
  } convert;
  auto* c = app.add_subcommand("convert", "Parse a W3C-PROV or SPADE JSON log into a graph file");
  c->add_option("--in", convert.in, "Input provenance log")->required()->check(CLI::ExistingFile);
  c->add_option("--out", convert.out, "Output graph file")->required();
  c->add_option("--format", convert.format, "Input format")
      ->check(CLI::IsMember({"w3c", "spade", "auto"}))
      ->capture_default_str();
  c->add_option("--dangling", convert.dangling, "Edges with undeclared endpoints")
      ->check(CLI::IsMember({"synthesize", "skip", "fail"}))
      ->capture_default_str();
  c->add_option("--out-format", convert.out_format, "Output encoding")
      ->check(CLI::IsMember({"binary", "json"}))
      ->capture_default_str();
  c->callback([&] {
    action = [&] {
      const std::string text = read_text(convert.in);
      HeteroMultigraph g = build_from_prov(text, prov_format_from_flag(convert.format),
                                           kDanglingMap.at(convert.dangling), err);
      const auto fmt = convert.out_format == "json" ? GraphFormat::kJson : GraphFormat::kBinaryCompressed;
      write_file_atomic(convert.out, serialize(g, fmt));
      out << stats_line(g) << "\n";
    };
  });

  // stats
  struct {
    std::string in, format = "auto", dangling = "synthesize";
    std::optional<std::string> out;
  } st;
  auto* s = app.add_subcommand("stats", "Print node, edge and relation statistics as JSON");
  s->add_option("--in", st.in, "Graph file or provenance log")->required()->check(CLI::ExistingFile);
  s->add_option("--format", st.format, "Input format")
      ->check(CLI::IsMember({"auto", "graph", "w3c", "spade"}))
      ->capture_default_str();
  s->add_option("--dangling", st.dangling, "Edges with undeclared endpoints (logs only)")
      ->check(CLI::IsMember({"synthesize", "skip", "fail"}))
      ->capture_default_str();
  s->add_option("--out", st.out, "Write JSON here instead of standard output");
  s->callback([&] {
    action = [&] {
      const GraphBundle b = load_graph_input(st.in, st.format, kDanglingMap.at(st.dangling), err);
      write_output(st.out, to_json(stats(b.graph)).dump(2) + "\n", out);
    };
  });

  // generate
  struct {
    std::string vector, out;
    std::size_t benign = 100, attack = 100;
    std::uint64_t seed = 0;
    double scale = 1.0, jitter = 0.10;
  } gen;
  auto* gcmd = app.add_subcommand("generate", "Generate a labelled synthetic scenario dataset");
  gcmd->add_option("--vector", gen.vector, "Attack vector")
      ->required()
      ->check(CLI::IsMember(vector_map()));
  gcmd->add_option("--benign", gen.benign, "Number of benign graphs")->capture_default_str();
  gcmd->add_option("--attack", gen.attack, "Number of attack graphs")->capture_default_str();
  gcmd->add_option("--seed", gen.seed, "Dataset seed")->capture_default_str();
  gcmd->add_option("--scale", gen.scale, "Size multiplier for the backbone graphs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gcmd->add_option("--jitter", gen.jitter, "Relative spread of node and edge counts")
      ->check(CLI::Range(0.0, 0.5))
      ->capture_default_str();
  gcmd->add_option("--out", gen.out, "Output directory")->required();
  gcmd->callback([&] {
    action = [&] {
      DatasetOptions o;
      o.scale = gen.scale;
      o.jitter = gen.jitter;
      const Dataset ds = generate_dataset(parse_attack_vector(gen.vector), gen.benign, gen.attack,
                                          gen.seed, o);
      export_dataset(ds, gen.out);
      err << "wrote " << ds.graphs.size() << " graphs to " << gen.out << "\n";
    };
  });

  // featurize
  struct {
    std::optional<std::string> in, dataset, config;
    std::string out, mode = "combined";
    std::size_t spectral_dim = 16;
    double coupling = 1.0;
    std::uint64_t seed = 0;
  } feat;
  auto* f = app.add_subcommand("featurize", "Compute degree and spectral node features");
  auto* f_in = f->add_option("--in", feat.in, "Single graph file")->check(CLI::ExistingFile);
  auto* f_ds = f->add_option("--dataset", feat.dataset, "Dataset directory")->check(CLI::ExistingDirectory);
  f_in->excludes(f_ds);
  f_ds->excludes(f_in);
  f->add_option("--out", feat.out, "Output file (--in) or directory (--dataset)")->required();
  auto* f_cfg = f->add_option("--config", feat.config, "Training configuration whose \"features\" block is used")
                    ->check(CLI::ExistingFile);
  auto* f_mode = f->add_option("--mode", feat.mode, "Feature mode")
                     ->check(CLI::IsMember({"degree", "spectral", "combined"}))
                     ->capture_default_str();
  auto* f_dim = f->add_option("--spectral-dim", feat.spectral_dim, "Spectral embedding dimension")
                    ->capture_default_str();
  auto* f_cpl = f->add_option("--coupling", feat.coupling, "Inter-layer coupling strength")
                    ->check(CLI::NonNegativeNumber)
                    ->capture_default_str();
  auto* f_seed = f->add_option("--seed", feat.seed, "Seed of the eigensolver start block")
                     ->capture_default_str();
  for (auto* o : {f_mode, f_dim, f_cpl, f_seed}) f_cfg->excludes(o);
  f->callback([&] {
    if (!feat.in && !feat.dataset) throw CLI::RequiredError("--in or --dataset");
    action = [&] {
      FeatureOptions options;
      if (feat.config) {
        options = training_arguments_from_json(read_json(*feat.config)).features;
      } else {
        options.mode = parse_feature_mode(feat.mode);
        options.spectral.dim = feat.spectral_dim;
        options.spectral.coupling = feat.coupling;
        options.spectral.seed = feat.seed;
      }
      if (feat.in) {
        const GraphBundle b = load_graph_input(*feat.in, "auto", DanglingPolicy::kSynthesize, err);
        std::vector<CanonicalRelation> schema;
        for (const auto& [rel, _] : b.graph.relations()) schema.push_back(rel);
        const FeatureSet fs = node_features(b.graph, schema, options);
        write_file_atomic(feat.out, serialize(b.graph, GraphFormat::kBinaryCompressed, &fs));
        out << "features " << fs.dim() << " columns for " << b.graph.num_nodes() << " nodes\n";
        return;
      }
      const Dataset ds = load_dataset(*feat.dataset);
      const FeaturizedDataset data = featurize(ds.graphs, options);
      const nlohmann::json manifest = read_json(fs::path(*feat.dataset) / "manifest.json");
      fs::create_directories(feat.out);
      for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
        const std::string file = manifest.at("graphs").at(i).at("file").get<std::string>();
        const fs::path target = fs::path(feat.out) / file;
        fs::create_directories(target.parent_path());
        write_file_atomic(target, serialize(ds.graphs[i], GraphFormat::kBinaryCompressed,
                                             &data.features[i]));
      }
      nlohmann::json schema = nlohmann::json::array();
      for (const auto& r : data.schema) schema.push_back(r.key());
      const nlohmann::json info{{"columns", data.columns},
                                {"schema", schema},
                                {"options", to_json(options)}};
      write_file_atomic(fs::path(feat.out) / "features.json", info.dump(2) + "\n");
      out << "features " << data.columns.size() << " columns for " << ds.graphs.size()
          << " graphs\n";
    };
  });

  // train
  struct {
    std::string dataset, config, out;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    bool verbose = false;
  } tr;
  auto* t = app.add_subcommand("train", "Cross-validate an R-GCN classifier on a dataset");
  t->add_option("--dataset", tr.dataset, "Dataset directory (from generate)")->required();
  t->add_option("--config", tr.config, "Training arguments JSON")->required();
  t->add_option("--folds", tr.folds, "Number of cross-validation folds")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000}))
      ->capture_default_str();
  t->add_option("--seed", tr.seed, "Seed of the fold assignment")->capture_default_str();
  t->add_option("--out", tr.out, "Output directory for summary and checkpoints")->required();
  t->add_flag("--verbose", tr.verbose, "Log every epoch to standard error");
  t->callback([&] {
    action = [&] {
      TrainingArguments targs = training_arguments_from_json(read_json(tr.config));
      const Dataset ds = load_dataset(tr.dataset);
      const fs::path out_dir(tr.out);
      if (!targs.checkpoint_dir) targs.checkpoint_dir = out_dir / "checkpoints";
      std::vector<Callback> callbacks;
      std::size_t fold = 0;
      callbacks.push_back([&](const CallbackEvent& ev) {
        if (ev.kind == EventKind::kLog && tr.verbose) err << "fold " << fold << " " << ev.message << "\n";
        if (ev.kind == EventKind::kTrainEnd) {
          err << "fold " << fold << " " << ev.message << "\n";
          ++fold;
        }
      });
      const CrossValidationSummary summary = cross_validate(
          targs, ds.graphs, tr.folds, tr.seed, callbacks, std::string(to_string(ds.vector)));
      write_file_atomic(out_dir / "summary.json", report(summary, ReportFormat::kJson));
      const std::string table = report(summary, ReportFormat::kTextTable);
      write_file_atomic(out_dir / "report.txt", table);
      out << table;
    };
  });

  // evaluate
  struct {
    std::string checkpoint, dataset;
    std::optional<std::string> out;
  } ev;
  auto* e = app.add_subcommand("evaluate", "Score a trained checkpoint on a dataset");
  e->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  e->add_option("--dataset", ev.dataset, "Dataset directory")->required();
  e->add_option("--out", ev.out, "Write metrics JSON here instead of standard output");
  e->callback([&] {
    action = [&] {
      const RGCNModel model = load_checkpoint(ev.checkpoint);
      const Dataset ds = load_dataset(ev.dataset);
      FeatureOptions options;
      if (model.metadata.contains("features")) {
        options = feature_options_from_json(model.metadata.at("features"));
      }
      std::vector<PreparedGraph> prepared;
      for (const auto& g : ds.graphs) {
        prepared.push_back(prepare_graph(model, g, node_features(g, model.schema, options)));
      }
      write_output(ev.out, to_json(evaluate(model, prepared)).dump(2) + "\n", out);
    };
  });

  // report
  struct {
    std::string in, format = "text";
    std::optional<std::string> out;
  } rp;
  auto* r = app.add_subcommand("report", "Render cross-validation summaries as a table, JSON or CSV");
  r->add_option("--in", rp.in, "Summary JSON (one summary or an array)")->required();
  r->add_option("--format", rp.format, "Output format")
      ->check(CLI::IsMember({"text", "json", "csv"}))
      ->capture_default_str();
  r->add_option("--out", rp.out, "Write here instead of standard output");
  r->callback([&] {
    action = [&] {
      const nlohmann::json j = read_json(rp.in);
      std::vector<CrossValidationSummary> summaries;
      if (j.is_array()) {
        for (const auto& item : j) summaries.push_back(summary_from_json(item));
      } else {
        summaries.push_back(summary_from_json(j));
      }
      write_output(rp.out, report(summaries, parse_report_format(rp.format)), out);
    };
  });

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& help) {
    app.exit(help, out, err);
    return kSuccess;
  } catch (const CLI::CallForAllHelp& help) {
    app.exit(help, out, err);
    return kSuccess;
  } catch (const CLI::ParseError& error) {
    app.exit(error, out, err);
    return kUsage;
  }

  if (!action) return kUsage;
  try {
    action();
    return kSuccess;
  } catch (const Error& error) {
    err << "error: " << error.what() << "\n";
    return exit_code_for(error.code());
  } catch (const fs::filesystem_error& error) {
    err << "error: " << error.what() << "\n";
    return kIO;
  } catch (const nlohmann::json::exception& error) {
    err << "error: " << error.what() << "\n";
    return kInputFormat;
  } catch (const std::exception& error) {
    err << "error: " << error.what() << "\n";
    return kUsage;
  }
}

}  // namespace provgraph::cli
