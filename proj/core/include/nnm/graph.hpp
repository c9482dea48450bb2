#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nnm/geometry.hpp"

namespace nnm {

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;
using Clock = std::function<Timestamp()>;

Timestamp wall_clock_ms();

struct NodeId {
    std::int64_t value = 0;

    constexpr auto operator<=>(const NodeId&) const = default;
};

inline std::string to_string(NodeId id) { return std::to_string(id.value); }

enum class TopicSource { generated, manual };

std::string_view to_string(TopicSource source);
TopicSource topic_source_from_string(std::string_view text);

/// One generated or hand-entered sentence attached to a node.
struct TopicText {
    std::string text;
    TopicSource source = TopicSource::generated;
    std::optional<std::string> prompt;
    Timestamp created_at = 0;

    bool operator==(const TopicText&) const = default;
};

struct MapNode {
    NodeId id;
    std::string name; ///< display form: trimmed, whitespace collapsed, first-seen casing
    std::optional<std::string> group;
    std::vector<TopicText> topics;
    std::uint64_t query_count = 0;
    Vec2 position;

    bool operator==(const MapNode&) const = default;
};

/// Undirected edge stored with source < target.
struct MapEdge {
    NodeId source;
    NodeId target;

    constexpr auto operator<=>(const MapEdge&) const = default;
};

/// Trim ASCII whitespace and collapse internal whitespace runs to one space.
std::string display_name(std::string_view raw);

/// Identity key for a node name: display_name() lowercased (ASCII).
std::string name_key(std::string_view raw);

/// The positioned concept graph. Nodes are kept in ascending id order; names
/// are unique under name_key(); edges are undirected, loop-free and unique.
class MapGraph {
public:
    static constexpr int kSchemaVersion = 1;

    /// Returns the existing id when the normalized name is already present.
    /// Throws InvalidArgument when the name normalizes to empty.
    NodeId add_node(std::string_view name, std::optional<std::string> group = std::nullopt);

    /// Inserts a fully specified node (import path). Throws InvalidArgument on a
    /// duplicate id, duplicate normalized name or empty name.
    void insert_node(MapNode node);

    /// Idempotent. Throws InvalidArgument for a self-loop and NotFound for a
    /// missing endpoint.
    void connect(NodeId a, NodeId b);

    bool has_edge(NodeId a, NodeId b) const;
    bool contains(NodeId id) const { return find(id) != nullptr; }

    const MapNode* find(NodeId id) const;
    const MapNode& node(NodeId id) const;
    std::optional<NodeId> find_by_name(std::string_view name) const;

    std::span<const MapNode> nodes() const { return nodes_; }
    const std::set<MapEdge>& edges() const { return edges_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    bool empty() const { return nodes_.empty(); }

    /// Position of a node in nodes() order.
    std::size_t index_of(NodeId id) const;
    std::size_t degree(NodeId id) const;
    std::vector<std::size_t> degrees() const; ///< in nodes() order
    std::vector<NodeId> neighbours(NodeId id) const;

    void add_topic(NodeId id, TopicText topic);
    void bump_query_count(NodeId id, std::uint64_t by = 1);
    void set_group(NodeId id, std::optional<std::string> group);
    void set_position(NodeId id, Vec2 position);
    /// Positions in nodes() order.
    void set_positions(std::span<const Vec2> positions);
    std::vector<Vec2> positions() const;

    int schema_version() const { return schema_version_; }
    std::optional<std::int64_t> layout_seed() const { return layout_seed_; }
    void set_layout_seed(std::optional<std::int64_t> seed) { layout_seed_ = seed; }

    std::size_t topic_count() const;

    /// Re-checks every invariant from scratch; throws Error on the first breach.
    void validate() const;

    bool operator==(const MapGraph& other) const;

private:
    MapNode& mutable_node(NodeId id);

    std::vector<MapNode> nodes_;
    std::set<MapEdge> edges_;
    std::unordered_map<std::string, NodeId> by_key_;
    std::int64_t next_id_ = 1;
    int schema_version_ = kSchemaVersion;
    std::optional<std::int64_t> layout_seed_;
};

} // namespace nnm

template <>
struct std::hash<nnm::NodeId> {
    std::size_t operator()(nnm::NodeId id) const noexcept {
        return std::hash<std::int64_t>{}(id.value);
    }
};
