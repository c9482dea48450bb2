#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nnm/geometry.hpp"
#include "nnm/graph.hpp"

namespace nnm {

struct LayoutParams {
    double repulsion_k = 100.0;
    double gravity_k = 1.0;
    int iterations = 500;
    double step_decay = 0.99;
    std::int64_t seed = 42;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

/// Cap on a single node's displacement during iteration `iter`:
/// 100 * step_decay^iter.
double max_step(const LayoutParams& params, int iter);

struct LayoutResult {
    std::vector<NodeId> ids;            ///< ascending, as in MapGraph::nodes()
    std::vector<Vec2> positions;        ///< parallel to ids
    std::vector<double> displacement_history; ///< summed |move| per iteration
    int iterations_run = 0;

    Vec2 position_of(NodeId id) const;
};

/// Circle of radius 100*sqrt(n) in id order plus a seeded jitter of length
/// at most 1. Depends only on the node ids and the seed.
std::vector<Vec2> init_positions(const MapGraph& graph, std::int64_t seed);

/// One iteration of the force model, positions in MapGraph::nodes() order.
///
/// Forces: degree-weighted repulsion k_r(deg_u+1)(deg_v+1)/d for every pair,
/// linear attraction d along every edge, and a constant pull
/// k_g(deg+1) toward the origin; d is clamped below at 0.01. Each node moves
/// by its net force divided by twice its mass (deg+1), capped at
/// max_step(iter). Throws LayoutError naming the pair on a non-finite force.
std::vector<Vec2> layout_step(const MapGraph& graph, std::span<const Vec2> positions,
                              const LayoutParams& params, int iter);

/// Runs from `initial` (or init_positions) for params.iterations steps,
/// stopping early once an iteration moves all nodes by less than
/// 1e-3 * node_count in total. Pure: the graph is not modified.
LayoutResult compute_layout(const MapGraph& graph, const LayoutParams& params,
                            std::optional<std::span<const Vec2>> initial = std::nullopt);

/// compute_layout, then writes the positions and seed into the graph.
LayoutResult run_layout(MapGraph& graph, const LayoutParams& params);

} // namespace nnm
