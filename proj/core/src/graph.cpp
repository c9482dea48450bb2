#include "nnm/graph.hpp"

#include <algorithm>
#include <chrono>

#include "nnm/errors.hpp"

namespace nnm {

namespace {

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::optional<std::string> clean_group(std::optional<std::string> group) {
    if (!group) return std::nullopt;
    std::string cleaned = display_name(*group);
    if (cleaned.empty()) return std::nullopt;
    return cleaned;
}

} // namespace

Timestamp wall_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string_view to_string(TopicSource source) {
    return source == TopicSource::manual ? "manual" : "generated";
}

TopicSource topic_source_from_string(std::string_view text) {
    if (text == "generated") return TopicSource::generated;
    if (text == "manual") return TopicSource::manual;
    throw InvalidArgument("unknown topic source '" + std::string(text) + "'");
}

std::string display_name(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        if (is_ascii_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

std::string name_key(std::string_view raw) {
    std::string key = display_name(raw);
    for (char& c : key) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return key;
}

NodeId MapGraph::add_node(std::string_view name, std::optional<std::string> group) {
    std::string shown = display_name(name);
    if (shown.empty()) throw InvalidArgument("node name is empty after normalization");
    std::string key = name_key(shown);
    if (auto it = by_key_.find(key); it != by_key_.end()) {
        MapNode& existing = mutable_node(it->second);
        if (!existing.group) existing.group = clean_group(std::move(group));
        return it->second;
    }
    MapNode node;
    node.id = NodeId{next_id_++};
    node.name = std::move(shown);
    node.group = clean_group(std::move(group));
    by_key_.emplace(std::move(key), node.id);
    nodes_.push_back(std::move(node));
    return nodes_.back().id;
}

void MapGraph::insert_node(MapNode node) {
    node.name = display_name(node.name);
    if (node.name.empty()) throw InvalidArgument("node name is empty after normalization");
    if (contains(node.id)) throw InvalidArgument("duplicate node id " + to_string(node.id));
    std::string key = name_key(node.name);
    if (by_key_.contains(key)) throw InvalidArgument("duplicate node name '" + node.name + "'");
    node.group = clean_group(std::move(node.group));
    by_key_.emplace(std::move(key), node.id);
    next_id_ = std::max(next_id_, node.id.value + 1);
    auto pos = std::lower_bound(nodes_.begin(), nodes_.end(), node.id,
                                [](const MapNode& n, NodeId id) { return n.id < id; });
    nodes_.insert(pos, std::move(node));
}

void MapGraph::connect(NodeId a, NodeId b) {
    if (a == b) throw InvalidArgument("self-loop on node " + to_string(a));
    if (!contains(a)) throw NotFound("no node with id " + to_string(a));
    if (!contains(b)) throw NotFound("no node with id " + to_string(b));
    edges_.insert(a < b ? MapEdge{a, b} : MapEdge{b, a});
}

bool MapGraph::has_edge(NodeId a, NodeId b) const {
    return edges_.contains(a < b ? MapEdge{a, b} : MapEdge{b, a});
}

const MapNode* MapGraph::find(NodeId id) const {
    auto pos = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                                [](const MapNode& n, NodeId v) { return n.id < v; });
    if (pos == nodes_.end() || pos->id != id) return nullptr;
    return &*pos;
}

const MapNode& MapGraph::node(NodeId id) const {
    const MapNode* n = find(id);
    if (!n) throw NotFound("no node with id " + to_string(id));
    return *n;
}

MapNode& MapGraph::mutable_node(NodeId id) {
    return const_cast<MapNode&>(node(id));
}

std::optional<NodeId> MapGraph::find_by_name(std::string_view name) const {
    auto it = by_key_.find(name_key(name));
    if (it == by_key_.end()) return std::nullopt;
    return it->second;
}

std::size_t MapGraph::index_of(NodeId id) const {
    const MapNode* n = find(id);
    if (!n) throw NotFound("no node with id " + to_string(id));
    return static_cast<std::size_t>(n - nodes_.data());
}

std::size_t MapGraph::degree(NodeId id) const {
    std::size_t d = 0;
    for (const MapEdge& e : edges_) {
        if (e.source == id || e.target == id) ++d;
    }
    return d;
}

std::vector<std::size_t> MapGraph::degrees() const {
    std::vector<std::size_t> out(nodes_.size(), 0);
    for (const MapEdge& e : edges_) {
        ++out[index_of(e.source)];
        ++out[index_of(e.target)];
    }
    return out;
}

std::vector<NodeId> MapGraph::neighbours(NodeId id) const {
    std::vector<NodeId> out;
    for (const MapEdge& e : edges_) {
        if (e.source == id) out.push_back(e.target);
        else if (e.target == id) out.push_back(e.source);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void MapGraph::add_topic(NodeId id, TopicText topic) {
    if (topic.text.empty()) throw InvalidArgument("topic text is empty");
    mutable_node(id).topics.push_back(std::move(topic));
}

void MapGraph::bump_query_count(NodeId id, std::uint64_t by) {
    mutable_node(id).query_count += by;
}

void MapGraph::set_group(NodeId id, std::optional<std::string> group) {
    mutable_node(id).group = clean_group(std::move(group));
}

void MapGraph::set_position(NodeId id, Vec2 position) {
    if (!position.finite()) throw InvalidArgument("non-finite position for node " + to_string(id));
    mutable_node(id).position = position;
}

void MapGraph::set_positions(std::span<const Vec2> positions) {
    if (positions.size() != nodes_.size())
        throw InvalidArgument("position count does not match node count");
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!positions[i].finite())
            throw InvalidArgument("non-finite position for node " + to_string(nodes_[i].id));
    }
    for (std::size_t i = 0; i < positions.size(); ++i) nodes_[i].position = positions[i];
}

std::vector<Vec2> MapGraph::positions() const {
    std::vector<Vec2> out;
    out.reserve(nodes_.size());
    for (const MapNode& n : nodes_) out.push_back(n.position);
    return out;
}

std::size_t MapGraph::topic_count() const {
    std::size_t total = 0;
    for (const MapNode& n : nodes_) total += n.topics.size();
    return total;
}

void MapGraph::validate() const {
    std::unordered_map<std::string, NodeId> keys;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const MapNode& n = nodes_[i];
        if (i > 0 && !(nodes_[i - 1].id < n.id)) throw Error("node ids not strictly increasing");
        if (n.name.empty() || display_name(n.name) != n.name)
            throw Error("node " + to_string(n.id) + " has a non-normalized name");
        if (!n.position.finite()) throw Error("node " + to_string(n.id) + " has a non-finite position");
        for (const TopicText& t : n.topics) {
            if (t.text.empty()) throw Error("node " + to_string(n.id) + " has an empty topic");
        }
        if (!keys.emplace(name_key(n.name), n.id).second)
            throw Error("duplicate node name '" + n.name + "'");
    }
    if (keys != by_key_) throw Error("name index out of sync");
    for (const MapEdge& e : edges_) {
        if (!(e.source < e.target)) throw Error("edge not in canonical order");
        if (!contains(e.source) || !contains(e.target)) throw Error("dangling edge");
    }
    if (!nodes_.empty() && next_id_ <= nodes_.back().id.value) throw Error("id counter behind");
}

bool MapGraph::operator==(const MapGraph& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_ &&
           schema_version_ == other.schema_version_ && layout_seed_ == other.layout_seed_;
}

} // namespace nnm
