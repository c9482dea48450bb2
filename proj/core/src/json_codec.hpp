#pragma once

// nlohmann::json conversions for the core types. Private to the build.

#include <json.hpp>

#include "nnm/graph.hpp"
#include "nnm/script.hpp"

namespace nnm::codec {

using nlohmann::json;

json to_json(const MapGraph& graph);
MapGraph graph_from_json(const json& j);

json to_json(const Script& script);
Script script_from_json(const json& j);

json to_json(const TrajectoryRecord& record);
TrajectoryRecord record_from_json(const json& j);

json to_json(const EvaluationState& state);
EvaluationState state_from_json(const json& j);

json to_json(const Agent& agent);
Agent agent_from_json(const json& j);

} // namespace nnm::codec
