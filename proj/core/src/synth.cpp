#include "provgraph/synth.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "provgraph/error.hpp"
#include "provgraph/rng.hpp"

namespace provgraph {

namespace {

struct WeightedRelation {
  const char* src;
  const char* edge;
  const char* dst;
  double weight;
};

// Relations present in every backbone graph.
constexpr std::array<WeightedRelation, 24> kCoreRelations{{
    {"task", "Used", "file", 14.0},
    {"file", "WasGeneratedBy", "task", 9.0},
    {"task", "Used", "path", 10.0},
    {"task", "WasInformedBy", "task", 4.0},
    {"process_memory", "WasGeneratedBy", "task", 8.0},
    {"task", "Used", "process_memory", 9.0},
    {"process_memory", "WasDerivedFrom", "path", 5.0},
    {"file", "WasDerivedFrom", "path", 6.0},
    {"task", "Used", "socket", 4.0},
    {"socket", "WasGeneratedBy", "task", 3.0},
    {"task", "WasAssociatedWith", "machine", 1.0},
    {"task", "Used", "directory", 3.0},
    {"directory", "WasGeneratedBy", "task", 1.0},
    {"path", "WasDerivedFrom", "directory", 2.0},
    {"task", "Used", "argv", 1.5},
    {"task", "Used", "envp", 1.5},
    {"socket", "WasDerivedFrom", "address", 1.0},
    {"task", "Used", "pipe", 2.0},
    {"pipe", "WasGeneratedBy", "task", 2.0},
    {"file", "WasDerivedFrom", "file", 3.0},
    {"process_memory", "WasDerivedFrom", "process_memory", 3.0},
    {"task", "Used", "xattr", 0.5},
    {"task", "Used", "iattr", 2.0},
    {"iattr", "WasGeneratedBy", "task", 1.5},
}};

// Optional relations; each graph draws enough of these to reach its
// relation-type target.
constexpr std::array<WeightedRelation, 14> kOptionalRelations{{
    {"socket", "WasDerivedFrom", "socket", 0.8},
    {"packet", "WasDerivedFrom", "socket", 0.8},
    {"task", "Used", "packet", 0.6},
    {"packet", "WasGeneratedBy", "task", 0.6},
    {"file", "WasDerivedFrom", "socket", 0.5},
    {"task", "Used", "link", 0.4},
    {"link", "WasDerivedFrom", "path", 0.4},
    {"xattr", "WasGeneratedBy", "task", 0.3},
    {"task", "WasAssociatedWith", "address", 0.3},
    {"directory", "WasDerivedFrom", "directory", 0.5},
    {"pipe", "WasDerivedFrom", "pipe", 0.4},
    {"envp", "WasDerivedFrom", "envp", 0.2},
    {"address", "WasDerivedFrom", "address", 0.2},
    {"path", "WasDerivedFrom", "path", 0.6},
}};

// Relations that only attack motifs produce. They never appear in benign
// graphs of any vector.
constexpr WeightedRelation kPopupOutput{"shm", "WasGeneratedBy", "task", 0.15};
constexpr WeightedRelation kPopupInput{"task", "Used", "shm", 0.15};
constexpr WeightedRelation kShellArgs{"argv", "WasGeneratedBy", "task", 0.15};
constexpr WeightedRelation kQueryChain{"socket", "WasDerivedFrom", "file", 0.15};

const std::vector<WeightedRelation>& exclusive_relations(AttackVector vector) {
  static const std::vector<WeightedRelation> none;
  static const std::vector<WeightedRelation> reflected{kPopupOutput};
  static const std::vector<WeightedRelation> dom{kPopupOutput, kPopupInput};
  static const std::vector<WeightedRelation> cl{kShellArgs};
  static const std::vector<WeightedRelation> sql{kQueryChain};
  switch (vector) {
    case AttackVector::kXssReflected: return reflected;
    case AttackVector::kXssDom: return dom;
    case AttackVector::kClInjection: return cl;
    case AttackVector::kSqlInjection: return sql;
    default: return none;
  }
}

double node_type_weight(std::string_view type) {
  static const std::map<std::string, double, std::less<>> weights{
      {"task", 0.14},     {"process_memory", 0.16}, {"path", 0.2},    {"file", 0.2},
      {"socket", 0.05},   {"directory", 0.05},      {"machine", 0.0}, {"argv", 0.03},
      {"envp", 0.03},     {"address", 0.02},        {"pipe", 0.03},   {"packet", 0.03},
      {"link", 0.01},     {"xattr", 0.01},          {"iattr", 0.04},  {"shm", 0.004},
  };
  auto it = weights.find(type);
  return it == weights.end() ? 0.01 : it->second;
}

constexpr std::array<ScenarioTarget, 12> kTargets{{
    {19436, 463682, 30}, {19547, 480179, 31},  // xss-stored
    {33481, 824276, 31}, {24435, 666705, 32},  // xss-reflected
    {31243, 753519, 30}, {30261, 751133, 32},  // xss-dom
    {32996, 793318, 29}, {25720, 631633, 30},  // cl-injection
    {22903, 543266, 30}, {29576, 733375, 30},  // sql-injection
    {21518, 517101, 30}, {418, 416, 1},        // brute-force
}};

// Splits `total` over `weights` by largest remainder, giving every slot at
// least `floor_each`. Requires total >= floor_each * weights.size().
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights,
                                   std::size_t floor_each) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n, floor_each);
  const std::size_t rest = total - floor_each * n;
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (n == 0 || rest == 0) return out;
  std::vector<double> remainder(n, 0.0);
  std::size_t given = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = sum > 0 ? static_cast<double>(rest) * weights[i] / sum
                                 : static_cast<double>(rest) / static_cast<double>(n);
    const auto whole = static_cast<std::size_t>(std::floor(exact));
    out[i] += whole;
    given += whole;
    remainder[i] = exact - static_cast<double>(whole);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; given < rest; i = (i + 1) % n, ++given) out[order[i]] += 1;
  return out;
}

std::size_t jittered(std::size_t target, double jitter, Rng& rng) {
  const double factor = 1.0 + rng.uniform(-jitter, jitter);
  return static_cast<std::size_t>(std::llround(static_cast<double>(target) * factor));
}

// Endpoint sampler for one node type. Nodes are introduced in index order
// at a rate that guarantees every node receives at least one edge; already
// introduced nodes are reused preferentially by degree (urn sampling).
class EndpointSampler {
 public:
  EndpointSampler(std::size_t nodes, std::size_t slots) : nodes_(nodes), slots_left_(slots) {
    urn_.reserve(slots);
  }

  std::uint32_t draw(Rng& rng) {
    const std::size_t uncovered = nodes_ - introduced_;
    std::uint32_t v;
    const bool fresh = uncovered > 0 && (introduced_ == 0 || uncovered >= slots_left_ ||
                                         rng.uniform_index(slots_left_) < uncovered);
    if (fresh) {
      v = static_cast<std::uint32_t>(introduced_++);
    } else if (urn_.empty() || rng.bernoulli(kUniformMix)) {
      v = static_cast<std::uint32_t>(rng.uniform_index(introduced_));
    } else {
      v = urn_[rng.uniform_index(urn_.size())];
    }
    urn_.push_back(v);
    if (slots_left_ > 0) --slots_left_;
    return v;
  }

  // Gives up `n` slots without drawing, keeping enough for the nodes not yet
  // introduced.
  void skip(std::size_t n) {
    const std::size_t reserved = nodes_ - introduced_;
    const std::size_t spare = slots_left_ > reserved ? slots_left_ - reserved : 0;
    slots_left_ -= std::min(n, spare);
  }

 private:
  static constexpr double kUniformMix = 0.25;
  std::size_t nodes_;
  std::size_t slots_left_;
  std::size_t introduced_ = 0;
  std::vector<std::uint32_t> urn_;
};

CanonicalRelation to_relation(const WeightedRelation& w) { return {w.src, w.edge, w.dst}; }

HeteroMultigraph brute_force_attack(const ScenarioSpec& spec, Rng& rng) {
  const ScenarioTarget t = kTargets[11];
  // Two login chains of sockets, each derived from the previous attempt.
  constexpr std::size_t kChains = 2;
  const std::size_t nodes = std::max<std::size_t>(jittered(t.nodes, spec.jitter, rng), 2 * kChains);
  GraphBuilder b;
  for (std::size_t i = 0; i < nodes; ++i) b.add_node_unchecked("socket", "socket:" + std::to_string(i));
  const auto h = b.relation({"socket", "WasDerivedFrom", "socket"});
  b.reserve(h, nodes - kChains);
  const std::size_t first = nodes / kChains;
  for (std::size_t i = 1; i < nodes; ++i) {
    if (i == first) continue;
    b.add_edge(h, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i - 1));
  }
  return std::move(b).finish();
}

}  // namespace

std::string_view to_string(AttackVector vector) {
  switch (vector) {
    case AttackVector::kXssStored: return "xss-stored";
    case AttackVector::kXssReflected: return "xss-reflected";
    case AttackVector::kXssDom: return "xss-dom";
    case AttackVector::kClInjection: return "cl-injection";
    case AttackVector::kSqlInjection: return "sql-injection";
    case AttackVector::kBruteForce: return "brute-force";
  }
  return "brute-force";
}

AttackVector parse_attack_vector(std::string_view text) {
  std::string norm(text);
  for (char& c : norm) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '_') c = '-';
  }
  for (AttackVector v : all_attack_vectors()) {
    if (norm == to_string(v)) return v;
  }
  throw InvalidArgument("unknown attack vector '" + std::string(text) + "'");
}

const std::vector<AttackVector>& all_attack_vectors() {
  static const std::vector<AttackVector> all{
      AttackVector::kXssStored,    AttackVector::kXssReflected, AttackVector::kXssDom,
      AttackVector::kClInjection, AttackVector::kSqlInjection, AttackVector::kBruteForce};
  return all;
}

ScenarioTarget scenario_target(AttackVector vector, GraphLabel label) {
  return kTargets[2 * static_cast<std::size_t>(vector) + (label == GraphLabel::kAttack ? 1 : 0)];
}

HeteroMultigraph generate_scenario(const ScenarioSpec& spec) {
  if (!(spec.jitter >= 0.0 && spec.jitter <= 0.5)) {
    throw InvalidArgument("jitter must lie in [0, 0.5]");
  }
  if (!(spec.scale > 0.0)) throw InvalidArgument("scale must be positive");
  Rng rng(spec.seed);
  const bool attack = spec.class_label == GraphLabel::kAttack;

  HeteroMultigraph g;
  if (attack && spec.vector == AttackVector::kBruteForce) {
    g = brute_force_attack(spec, rng);
  } else {
    const ScenarioTarget t = scenario_target(spec.vector, spec.class_label);

    // Relation-type budget.
    const int delta = spec.jitter > 0.0 ? static_cast<int>(rng.uniform_int(-1, 1)) : 0;
    const std::size_t relation_count = static_cast<std::size_t>(static_cast<int>(t.relation_types) + delta);
    std::vector<WeightedRelation> relations(kCoreRelations.begin(), kCoreRelations.end());
    std::vector<WeightedRelation> optional(kOptionalRelations.begin(), kOptionalRelations.end());
    for (std::size_t i = optional.size(); i > 1; --i) {
      std::swap(optional[i - 1], optional[rng.uniform_index(i)]);
    }
    static const std::vector<WeightedRelation> kNone;
    // Stored XSS has no exclusive relation: its attack graphs carry one more
    // optional relation than benign ones (which a benign graph of another
    // seed may well contain) and differ by message multiplicity below.
    const auto& exclusive = attack ? exclusive_relations(spec.vector) : kNone;
    const std::size_t base = relation_count - exclusive.size();
    const std::size_t picks = std::min(base - kCoreRelations.size(), optional.size());
    relations.insert(relations.end(), optional.begin(),
                     optional.begin() + static_cast<std::ptrdiff_t>(picks));
    relations.insert(relations.end(), exclusive.begin(), exclusive.end());

    // Node and edge budgets.
    const std::size_t target_nodes =
        static_cast<std::size_t>(std::llround(static_cast<double>(t.nodes) * spec.scale));
    const std::size_t target_edges =
        static_cast<std::size_t>(std::llround(static_cast<double>(t.edges) * spec.scale));
    std::set<std::string> type_set;
    for (const auto& r : relations) {
      type_set.insert(r.src);
      type_set.insert(r.dst);
    }
    const std::vector<std::string> types(type_set.begin(), type_set.end());
    const std::size_t num_nodes =
        std::max(jittered(target_nodes, spec.jitter, rng), 2 * types.size());
    const std::size_t num_edges =
        std::max(jittered(target_edges, spec.jitter, rng), 2 * relations.size() + num_nodes);

    std::vector<double> edge_weights;
    for (const auto& r : relations) edge_weights.push_back(r.weight);
    const std::vector<std::size_t> edge_budget = apportion(num_edges, edge_weights, 1);

    // Endpoint slots per type cap the node count of that type so that every
    // node can be covered.
    std::map<std::string, std::size_t> slots;
    for (std::size_t i = 0; i < relations.size(); ++i) {
      slots[relations[i].src] += edge_budget[i];
      slots[relations[i].dst] += edge_budget[i];
    }
    std::vector<double> type_weights;
    for (const auto& type : types) type_weights.push_back(node_type_weight(type));
    std::vector<std::size_t> type_nodes = apportion(num_nodes, type_weights, 1);
    // Move any overflow (more nodes than endpoint slots) to the largest type.
    std::size_t overflow = 0;
    for (std::size_t i = 0; i < types.size(); ++i) {
      const std::size_t cap = std::max<std::size_t>(1, slots[types[i]] / 2);
      if (type_nodes[i] > cap) {
        overflow += type_nodes[i] - cap;
        type_nodes[i] = cap;
      }
    }
    if (overflow > 0) {
      const auto biggest = static_cast<std::size_t>(
          std::max_element(type_nodes.begin(), type_nodes.end()) - type_nodes.begin());
      type_nodes[biggest] += overflow;
    }

    GraphBuilder b;
    std::map<std::string, EndpointSampler> samplers;
    for (std::size_t i = 0; i < types.size(); ++i) {
      for (std::size_t k = 0; k < type_nodes[i]; ++k) {
        b.add_node_unchecked(types[i], types[i] + ":" + std::to_string(k));
      }
      samplers.emplace(types[i], EndpointSampler(type_nodes[i], slots[types[i]]));
    }

    // Repeated message posts: bursts of parallel (file, WasGeneratedBy,
    // task) edges between one writer and one message file. Benign captures
    // post once or twice; the stored-XSS bot adds a further post with
    // probability one half.
    std::size_t bursts = 0;
    if (spec.vector == AttackVector::kXssStored) {
      bursts = static_cast<std::size_t>(rng.uniform_int(1, 2));
      if (attack && rng.bernoulli(0.5)) ++bursts;
    }

    for (std::size_t i = 0; i < relations.size(); ++i) {
      const auto& r = relations[i];
      const auto h = b.relation(to_relation(r));
      b.reserve(h, edge_budget[i]);
      EndpointSampler& src = samplers.at(r.src);
      EndpointSampler& dst = samplers.at(r.dst);
      std::size_t remaining = edge_budget[i];
      if (bursts > 0 && std::string_view(r.src) == "file" &&
          std::string_view(r.edge) == "WasGeneratedBy") {
        const std::size_t burst = std::max<std::size_t>(2, num_edges / 200);
        for (std::size_t k = 0; k < bursts && remaining > burst; ++k) {
          const std::uint32_t s = src.draw(rng);
          const std::uint32_t d = dst.draw(rng);
          for (std::size_t e = 0; e < burst; ++e) b.add_edge(h, s, d);
          src.skip(burst - 1);
          dst.skip(burst - 1);
          remaining -= burst;
        }
      }
      for (std::size_t e = 0; e < remaining; ++e) {
        const std::uint32_t s = src.draw(rng);
        const std::uint32_t d = dst.draw(rng);
        b.add_edge(h, s, d);
      }
    }
    g = std::move(b).finish();
  }
  g.set_label(spec.class_label);
  g.set_scenario(std::string(to_string(spec.vector)));
  return g;
}

Dataset generate_dataset(AttackVector vector, std::size_t n_benign, std::size_t n_attack,
                         std::uint64_t seed, const DatasetOptions& options) {
  Dataset ds;
  ds.vector = vector;
  ds.seed = seed;
  ds.jitter = options.jitter;
  ds.scale = options.scale;
  const std::size_t total = n_benign + n_attack;
  ds.graphs.reserve(total);
  ds.graph_seeds.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    ScenarioSpec spec;
    spec.vector = vector;
    spec.class_label = i < n_benign ? GraphLabel::kBenign : GraphLabel::kAttack;
    spec.seed = derive_seed(seed, i);
    spec.jitter = options.jitter;
    spec.scale = options.scale;
    ds.graph_seeds.push_back(spec.seed);
    ds.graphs.push_back(generate_scenario(spec));
  }
  return ds;
}

std::vector<CanonicalRelation> relation_schema(std::span<const HeteroMultigraph> graphs) {
  std::set<CanonicalRelation> all;
  for (const auto& g : graphs) {
    for (const auto& [rel, _] : g.relations()) all.insert(rel);
  }
  return {all.begin(), all.end()};
}

}  // namespace provgraph
