#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "provgraph/error.hpp"
#include "provgraph/prov_parser.hpp"

namespace provgraph {
namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(PROVGRAPH_FIXTURE_DIR) + "/" + name, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_warning(const ProvDocument& doc, std::string_view code) {
  return std::any_of(doc.warnings.begin(), doc.warnings.end(),
                     [&](const std::string& w) { return w.rfind(code, 0) == 0; });
}

TEST(SniffFormat, Examples) {
  EXPECT_EQ(sniff_format(R"({"activity":{"a1":{}}})"), ProvFormat::kW3CProv);
  EXPECT_EQ(sniff_format(R"([{"type":"Activity","id":"1"}])"), ProvFormat::kSpadeJson);
  EXPECT_EQ(sniff_format("hello"), ProvFormat::kUnknown);
  EXPECT_EQ(sniff_format(""), ProvFormat::kUnknown);
  EXPECT_EQ(sniff_format("{"), ProvFormat::kUnknown);
}

TEST(SniffFormat, Fixtures) {
  EXPECT_EQ(sniff_format(fixture("w3c_figure.json")), ProvFormat::kW3CProv);
  EXPECT_EQ(sniff_format(fixture("w3c_web_request.json")), ProvFormat::kW3CProv);
  EXPECT_EQ(sniff_format(fixture("spade_figure.json")), ProvFormat::kSpadeJson);
  EXPECT_EQ(sniff_format(fixture("spade_stream.json")), ProvFormat::kSpadeJson);
  EXPECT_EQ(sniff_format(fixture("spade_lines.json")), ProvFormat::kSpadeJson);
}

TEST(ParseW3C, OneEdgeDocument) {
  const auto doc = parse_w3c_prov(
      R"({"activity":{"a1":{}},"entity":{"e1":{}},"used":{"u1":{"prov:activity":"a1","prov:entity":"e1"}}})");
  ASSERT_EQ(doc.nodes.size(), 2u);
  ASSERT_EQ(doc.edges.size(), 1u);
  EXPECT_EQ(doc.edges[0].relation, "used");
  EXPECT_EQ(doc.edges[0].src, "a1");
  EXPECT_EQ(doc.edges[0].dst, "e1");
  EXPECT_TRUE(doc.warnings.empty());
}

TEST(ParseW3C, EmptyDocument) {
  const auto doc = parse_w3c_prov("{}");
  EXPECT_TRUE(doc.nodes.empty());
  EXPECT_TRUE(doc.edges.empty());
  EXPECT_TRUE(doc.warnings.empty());
}

TEST(ParseW3C, FigureScenario) {
  const auto doc = normalize(parse_w3c_prov(fixture("w3c_figure.json")));
  ASSERT_EQ(doc.nodes.size(), 4u);
  std::vector<std::string> types;
  for (const auto& n : doc.nodes) types.push_back(n.node_type);
  std::sort(types.begin(), types.end());
  EXPECT_EQ(types, (std::vector<std::string>{"path", "process_memory", "socket", "task"}));
  ASSERT_GE(doc.edges.size(), 4u);
  std::vector<std::string> rels;
  for (const auto& e : doc.edges) rels.push_back(e.relation);
  std::sort(rels.begin(), rels.end());
  EXPECT_EQ(rels, (std::vector<std::string>{"Used", "WasDerivedFrom", "WasGeneratedBy",
                                            "WasInformedBy"}));
  // Self-inform edge survives.
  const auto self = std::find_if(doc.edges.begin(), doc.edges.end(),
                                 [](const EdgeRecord& e) { return e.src == e.dst; });
  EXPECT_NE(self, doc.edges.end());
}

TEST(ParseW3C, TypedLiteralKeepsValue) {
  const auto doc = parse_w3c_prov(fixture("w3c_figure.json"));
  const auto task = std::find_if(doc.nodes.begin(), doc.nodes.end(),
                                 [](const NodeRecord& n) { return n.node_type == "task"; });
  ASSERT_NE(task, doc.nodes.end());
  EXPECT_EQ(task->attributes.at("cf:pid"), "1712");
}

TEST(ParseW3C, MissingEndpointWarns) {
  const auto doc = parse_w3c_prov(R"({"activity":{"a1":{}},"used":{"u1":{"prov:activity":"a1"}}})");
  EXPECT_TRUE(doc.edges.empty());
  EXPECT_TRUE(has_warning(doc, "MISSING_ENDPOINT"));
}

TEST(ParseW3C, UnknownTopLevelKeyWarns) {
  const auto doc = parse_w3c_prov(R"({"activity":{"a1":{}},"bundle_x":{}})");
  EXPECT_EQ(doc.nodes.size(), 1u);
  EXPECT_TRUE(has_warning(doc, "UNKNOWN_KEY"));
}

TEST(ParseW3C, MalformedInputs) {
  EXPECT_THROW(parse_w3c_prov("[1,2]"), MalformedInput);
  EXPECT_THROW(parse_w3c_prov("not json"), MalformedInput);
  try {
    parse_w3c_prov(fixture("w3c_truncated.json"));
    FAIL() << "expected MalformedInput";
  } catch (const MalformedInput& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos) << e.what();
  }
}

TEST(ParseSpade, SingleNode) {
  const auto doc =
      parse_spade_json(R"([{"type":"Entity","id":"n1","annotations":{"object_type":"socket"}}])");
  ASSERT_EQ(doc.nodes.size(), 1u);
  EXPECT_EQ(doc.nodes[0].node_type, "socket");
  EXPECT_TRUE(doc.edges.empty());
}

TEST(ParseSpade, SingleEdge) {
  const auto doc = parse_spade_json(
      R"([{"type":"Entity","id":"n1"},{"type":"Entity","id":"n2"},{"type":"WasDerivedFrom","from":"n1","to":"n2"}])");
  EXPECT_EQ(doc.nodes.size(), 2u);
  ASSERT_EQ(doc.edges.size(), 1u);
  EXPECT_EQ(doc.edges[0].relation, "WasDerivedFrom");
  EXPECT_EQ(doc.edges[0].src, "n1");
  EXPECT_EQ(doc.edges[0].dst, "n2");
}

TEST(ParseSpade, SocketChain) {
  std::string text = "[";
  for (int i = 0; i < 418; ++i) {
    text += R"({"type":"Artifact","id":"s)" + std::to_string(i) +
            R"(","annotations":{"object_type":"socket"}},)";
  }
  for (int i = 1; i <= 416; ++i) {
    text += R"({"type":"WasDerivedFrom","from":"s)" + std::to_string(i) + R"(","to":"s)" +
            std::to_string(i - 1) + "\"}";
    text += i == 416 ? "]" : ",";
  }
  const auto doc = parse_spade_json(text);
  EXPECT_EQ(doc.nodes.size(), 418u);
  EXPECT_EQ(doc.edges.size(), 416u);
  EXPECT_TRUE(doc.warnings.empty());
}

TEST(ParseSpade, StreamVariants) {
  const auto stream = parse_spade_json(fixture("spade_stream.json"));
  EXPECT_EQ(stream.nodes.size(), 4u);
  EXPECT_EQ(stream.edges.size(), 6u);
  const auto lines = parse_spade_json(fixture("spade_lines.json"));
  EXPECT_EQ(lines.nodes.size(), 3u);
  EXPECT_EQ(lines.edges.size(), 3u);
}

TEST(ParseSpade, ParallelEdgesGetDistinctIds) {
  const auto doc = normalize(parse_spade_json(fixture("spade_stream.json")));
  std::vector<std::string> ids;
  for (const auto& e : doc.edges) ids.push_back(e.id);
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
}

TEST(ParseSpade, MissingEndpointWarns) {
  const auto doc = parse_spade_json(R"([{"type":"Entity","id":"n1"},{"type":"Used","from":"n1"}])");
  EXPECT_TRUE(doc.edges.empty());
  EXPECT_TRUE(has_warning(doc, "MISSING_ENDPOINT"));
}

TEST(ParseSpade, ShuffledArrayEqualUpToOrder) {
  const std::string text = fixture("spade_figure.json");
  auto records = nlohmann::json::parse(text);
  std::mt19937_64 gen(11);
  for (int round = 0; round < 5; ++round) {
    std::shuffle(records.begin(), records.end(), gen);
    auto a = parse_spade_json(text);
    auto b = parse_spade_json(records.dump());
    auto by_id = [](const auto& x, const auto& y) { return x.id < y.id; };
    std::sort(a.nodes.begin(), a.nodes.end(), by_id);
    std::sort(b.nodes.begin(), b.nodes.end(), by_id);
    std::sort(a.edges.begin(), a.edges.end(), by_id);
    std::sort(b.edges.begin(), b.edges.end(), by_id);
    EXPECT_EQ(a, b);
  }
}

TEST(ParseProv, DispatchMatchesExplicitFormat) {
  for (const char* name : {"w3c_figure.json", "w3c_web_request.json", "w3c_dangling.json"}) {
    const std::string text = fixture(name);
    EXPECT_EQ(parse_prov(text), parse_prov(text, ProvFormat::kW3CProv)) << name;
  }
  for (const char* name : {"spade_figure.json", "spade_stream.json", "spade_lines.json"}) {
    const std::string text = fixture(name);
    EXPECT_EQ(parse_prov(text), parse_prov(text, ProvFormat::kSpadeJson)) << name;
  }
  EXPECT_THROW(parse_prov("hello"), MalformedInput);
}

TEST(Normalize, DuplicateNodeMerged) {
  ProvDocument doc;
  doc.nodes.push_back({"n1", "task", {{"a", "1"}}, ProvLayer::kUnknown});
  doc.nodes.push_back({"n1", "task", {{"b", "2"}}, ProvLayer::kUnknown});
  const auto out = normalize(doc);
  ASSERT_EQ(out.nodes.size(), 1u);
  EXPECT_EQ(out.nodes[0].attributes, (Attributes{{"a", "1"}, {"b", "2"}}));
  EXPECT_EQ(out.warnings.size(), 1u);
}

TEST(Normalize, ConflictLastWriterWins) {
  ProvDocument doc;
  doc.nodes.push_back({"n1", "task", {{"a", "1"}}, ProvLayer::kUnknown});
  doc.nodes.push_back({"n1", "task", {{"a", "2"}}, ProvLayer::kUnknown});
  const auto out = normalize(doc);
  EXPECT_EQ(out.nodes[0].attributes.at("a"), "2");
  EXPECT_TRUE(has_warning(out, "DUPLICATE_NODE"));
}

TEST(Normalize, DanglingPolicies) {
  ProvDocument doc;
  doc.nodes.push_back({"n1", "task", {}, ProvLayer::kUnknown});
  doc.edges.push_back({"e1", "used", "n1", "nX", {}});

  const auto synth = normalize(doc, {DanglingPolicy::kSynthesize});
  ASSERT_EQ(synth.nodes.size(), 2u);
  EXPECT_EQ(synth.nodes[1].id, "nX");
  EXPECT_EQ(synth.nodes[1].node_type, "unknown");
  EXPECT_EQ(synth.edges.size(), 1u);
  EXPECT_EQ(synth.warnings.size(), 1u);

  const auto skip = normalize(doc, {DanglingPolicy::kSkip});
  EXPECT_EQ(skip.nodes.size(), 1u);
  EXPECT_TRUE(skip.edges.empty());
  EXPECT_EQ(skip.warnings.size(), 1u);
}

TEST(Normalize, CanonicalNames) {
  EXPECT_EQ(canonical_node_type("prov:Activity"), "activity");
  EXPECT_EQ(canonical_node_type("  Task "), "task");
  EXPECT_EQ(canonical_node_type(""), "unknown");
  EXPECT_EQ(canonical_relation("wasGeneratedBy"), "WasGeneratedBy");
  EXPECT_EQ(canonical_relation("USED"), "Used");
}

TEST(Normalize, IdempotentOnFixtures) {
  for (const char* name : {"w3c_figure.json", "w3c_web_request.json", "w3c_dangling.json",
                           "spade_figure.json", "spade_stream.json", "spade_lines.json"}) {
    const auto once = normalize(parse_prov(fixture(name)));
    const auto twice = normalize(once);
    EXPECT_EQ(once, twice) << name;
    EXPECT_EQ(to_json(once).dump(), to_json(twice).dump()) << name;
  }
}

TEST(Normalize, RecordCountsConserved) {
  // Every raw record either survives or is accounted for by a warning.
  const auto raw = parse_prov(fixture("w3c_web_request.json"));
  const auto json = nlohmann::json::parse(fixture("w3c_web_request.json"));
  std::size_t nodes = 0, edges = 0;
  for (const auto& [key, value] : json.items()) {
    if (key == "prefix") continue;
    if (key == "entity" || key == "activity" || key == "agent") {
      nodes += value.size();
    } else {
      edges += value.size();
    }
  }
  std::size_t skipped = 0;
  for (const auto& w : raw.warnings) skipped += w.rfind("MISSING_ENDPOINT", 0) == 0;
  EXPECT_EQ(raw.nodes.size(), nodes);
  EXPECT_EQ(raw.edges.size() + skipped, edges);
}

TEST(DanglingPolicyNames, RoundTrip) {
  for (auto p : {DanglingPolicy::kSynthesize, DanglingPolicy::kSkip, DanglingPolicy::kFail}) {
    EXPECT_EQ(parse_dangling_policy(to_string(p)), p);
  }
  EXPECT_THROW(parse_dangling_policy("bogus"), InvalidArgument);
}

}  // namespace
}  // namespace provgraph
