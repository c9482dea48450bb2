#include "nnm/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "nnm/errors.hpp"

namespace nnm {

namespace {

constexpr double kMinDistance = 0.01;
constexpr double kStartStep = 100.0;

// Dense view of the graph used by the inner loop.
struct Frame {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<double> mass; // deg + 1
    std::vector<NodeId> ids;

    explicit Frame(const MapGraph& graph) {
        auto deg = graph.degrees();
        mass.reserve(deg.size());
        for (std::size_t d : deg) mass.push_back(static_cast<double>(d) + 1.0);
        for (const MapNode& n : graph.nodes()) ids.push_back(n.id);
        edges.reserve(graph.edge_count());
        for (const MapEdge& e : graph.edges()) edges.emplace_back(graph.index_of(e.source), graph.index_of(e.target));
    }
};

[[noreturn]] void non_finite(const Frame& f, std::size_t a, std::size_t b, const char* what) {
    throw LayoutError(std::string("non-finite ") + what + " force between nodes " + to_string(f.ids[a]) + " and " +
                      to_string(f.ids[b]));
}

// Unit vector for coincident nodes; antisymmetric by construction since the
// caller applies it with opposite signs.
Vec2 fallback_direction(std::size_t a, std::size_t b) {
    double angle = std::fmod(static_cast<double>(a * 7919 + b * 104729) * 2.399963229728653, 2.0 * std::numbers::pi);
    return {std::cos(angle), std::sin(angle)};
}

double step(const Frame& f, std::span<const Vec2> in, std::span<Vec2> out, const LayoutParams& params, int iter) {
    const std::size_t n = in.size();
    std::vector<Vec2> force(n);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            Vec2 delta = in[i] - in[j];
            double dist = delta.length();
            double d = std::max(dist, kMinDistance);
            double mag = params.repulsion_k * f.mass[i] * f.mass[j] / d;
            Vec2 dir = dist > 0.0 ? delta * (1.0 / dist) : fallback_direction(i, j);
            Vec2 push = dir * mag;
            if (!push.finite()) non_finite(f, i, j, "repulsion");
            force[i] += push;
            force[j] -= push;
        }
    }
    for (auto [a, b] : f.edges) {
        Vec2 pull = in[b] - in[a];
        if (!pull.finite()) non_finite(f, a, b, "attraction");
        force[a] += pull;
        force[b] -= pull;
    }
    if (params.gravity_k > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            double r = in[i].length();
            if (r > 0.0) force[i] -= in[i] * (params.gravity_k * f.mass[i] / r);
        }
    }

    const double cap = max_step(params, iter);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!force[i].finite()) non_finite(f, i, i, "net");
        Vec2 move = force[i] * (0.5 / f.mass[i]);
        double len = move.length();
        if (len > cap) {
            move = move * (cap / len);
            len = cap;
        }
        out[i] = in[i] + move;
        total += len;
    }
    return total;
}

} // namespace

void LayoutParams::validate() const {
    if (!(repulsion_k > 0.0) || !std::isfinite(repulsion_k)) throw ConfigError("repulsion_k must be positive");
    if (!(gravity_k >= 0.0) || !std::isfinite(gravity_k)) throw ConfigError("gravity_k must be non-negative");
    if (iterations < 1) throw ConfigError("iterations must be positive");
    if (!(step_decay > 0.0 && step_decay <= 1.0)) throw ConfigError("step_decay must be in (0, 1]");
}

double max_step(const LayoutParams& params, int iter) {
    return kStartStep * std::pow(params.step_decay, iter);
}

Vec2 LayoutResult::position_of(NodeId id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) throw NotFound("no layout position for node " + to_string(id));
    return positions[static_cast<std::size_t>(it - ids.begin())];
}

std::vector<Vec2> init_positions(const MapGraph& graph, std::int64_t seed) {
    const std::size_t n = graph.node_count();
    std::vector<Vec2> out;
    out.reserve(n);
    const double radius = 100.0 * std::sqrt(static_cast<double>(n));
    std::size_t i = 0;
    for (const MapNode& node : graph.nodes()) {
        double angle = 2.0 * std::numbers::pi * static_cast<double>(i++) / static_cast<double>(n);
        std::seed_seq seq{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(node.id.value)};
        std::mt19937_64 rng(seq);
        // 53-bit uniforms in [0,1) without going through a distribution object,
        // so the jitter is identical across standard libraries.
        auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
        double jitter_angle = 2.0 * std::numbers::pi * unit();
        double jitter_len = unit();
        out.push_back({radius * std::cos(angle) + jitter_len * std::cos(jitter_angle),
                       radius * std::sin(angle) + jitter_len * std::sin(jitter_angle)});
    }
    return out;
}

std::vector<Vec2> layout_step(const MapGraph& graph, std::span<const Vec2> positions, const LayoutParams& params,
                              int iter) {
    params.validate();
    if (positions.size() != graph.node_count()) throw InvalidArgument("position count does not match node count");
    for (const Vec2& p : positions) {
        if (!p.finite()) throw InvalidArgument("non-finite input position");
    }
    Frame frame(graph);
    std::vector<Vec2> out(positions.size());
    step(frame, positions, out, params, iter);
    return out;
}

LayoutResult compute_layout(const MapGraph& graph, const LayoutParams& params,
                            std::optional<std::span<const Vec2>> initial) {
    params.validate();
    LayoutResult result;
    Frame frame(graph);
    result.ids = frame.ids;
    if (initial) {
        if (initial->size() != graph.node_count()) throw InvalidArgument("position count does not match node count");
        result.positions.assign(initial->begin(), initial->end());
    } else {
        result.positions = init_positions(graph, params.seed);
    }
    const std::size_t n = result.positions.size();
    if (n == 0) return result;

    std::vector<Vec2> next(n);
    const double threshold = 1e-3 * static_cast<double>(n);
    for (int iter = 0; iter < params.iterations; ++iter) {
        double moved = step(frame, result.positions, next, params, iter);
        result.positions.swap(next);
        result.displacement_history.push_back(moved);
        ++result.iterations_run;
        if (moved < threshold) break;
    }
    return result;
}

LayoutResult run_layout(MapGraph& graph, const LayoutParams& params) {
    LayoutResult result = compute_layout(graph, params);
    graph.set_positions(result.positions);
    graph.set_layout_seed(params.seed);
    return result;
}

} // namespace nnm
