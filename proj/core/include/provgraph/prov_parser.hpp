#pragma once

#include <string_view>

#include "provgraph/prov_document.hpp"

namespace provgraph {

// Classifies raw input without throwing. W3C-PROV documents are JSON objects
// keyed by PROV record categories; SPADE documents are arrays (or
// line-delimited streams) of objects with a "type" field.
ProvFormat sniff_format(std::string_view text) noexcept;

// Both parsers throw MalformedInput (with a line/column position when the
// JSON itself is broken). Records that cannot be used are skipped with a
// warning, never silently.
ProvDocument parse_w3c_prov(std::string_view text);
ProvDocument parse_spade_json(std::string_view text);

// Dispatches on sniff_format; MalformedInput when the format is unknown.
ProvDocument parse_prov(std::string_view text, ProvFormat format = ProvFormat::kUnknown);

struct NormalizeOptions {
  DanglingPolicy dangling = DanglingPolicy::kSynthesize;
};

// Folds node types to lower case without namespace prefixes, maps PROV
// relation names onto their PascalCase spelling, merges duplicate node ids
// (last writer wins on conflicting attributes) and resolves dangling edge
// endpoints per policy. Idempotent.
ProvDocument normalize(const ProvDocument& doc, const NormalizeOptions& options = {});

// Helpers exposed for the graph builder and tests.
std::string canonical_node_type(std::string_view raw);
std::string canonical_relation(std::string_view raw);

}  // namespace provgraph
