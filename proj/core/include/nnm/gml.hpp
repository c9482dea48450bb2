#pragma once

#include <string>
#include <string_view>

#include "nnm/graph.hpp"

namespace nnm {

/// Serializes ids, labels, groups, query counts (as `value`), positions and
/// edges. Topic texts are not part of GML. Output is deterministic: nodes by
/// ascending id, edges by ascending (source, target), coordinates in shortest
/// round-trip decimal form.
std::string export_gml(const MapGraph& graph);

/// Reads the subset written by export_gml. Unknown keys are skipped at any
/// depth. Throws GmlParseError (with line number) on malformed tokens,
/// unbalanced brackets, duplicate ids or names, self-loops and dangling edges.
MapGraph import_gml(std::string_view document);

} // namespace nnm
