#include "json_codec.hpp"

#include <fstream>
#include <sstream>

#include "nnm/document.hpp"
#include "nnm/errors.hpp"
#include "nnm/gml.hpp"

namespace nnm {

namespace codec {

namespace {

json opt(const std::optional<std::string>& s) {
    return s ? json(*s) : json(nullptr);
}

std::optional<std::string> opt_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    return it->dump();
}

json to_json(Vec2 v) {
    return {{"x", v.x}, {"y", v.y}};
}

Vec2 vec_from_json(const json& j) {
    return {j.at("x").get<double>(), j.at("y").get<double>()};
}

json to_json(const TopicText& t) {
    return {{"text", t.text}, {"source", std::string(to_string(t.source))}, {"prompt", opt(t.prompt)},
            {"created_at", t.created_at}};
}

TopicText topic_from_json(const json& j) {
    TopicText t;
    t.text = j.at("text").get<std::string>();
    t.source = topic_source_from_string(j.value("source", std::string("generated")));
    t.prompt = opt_string(j, "prompt");
    t.created_at = j.value("created_at", Timestamp{0});
    return t;
}

json to_json(const std::map<std::string, Agent>& agents) {
    json out = json::object();
    for (const auto& [label, agent] : agents) out[label] = codec::to_json(agent);
    return out;
}

std::map<std::string, Agent> agents_from_json(const json& j) {
    std::map<std::string, Agent> out;
    for (auto it = j.begin(); it != j.end(); ++it) out.emplace(it.key(), agent_from_json(it.value()));
    return out;
}

} // namespace

json to_json(const MapGraph& graph) {
    json nodes = json::array();
    for (const MapNode& n : graph.nodes()) {
        json topics = json::array();
        for (const TopicText& t : n.topics) topics.push_back(to_json(t));
        nodes.push_back({{"id", n.id.value},
                         {"name", n.name},
                         {"group", opt(n.group)},
                         {"query_count", n.query_count},
                         {"position", to_json(n.position)},
                         {"topics", std::move(topics)}});
    }
    json edges = json::array();
    for (const MapEdge& e : graph.edges()) edges.push_back({e.source.value, e.target.value});
    json out = {{"schema_version", graph.schema_version()}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
    out["layout_seed"] = graph.layout_seed() ? json(*graph.layout_seed()) : json(nullptr);
    return out;
}

MapGraph graph_from_json(const json& j) {
    int version = j.value("schema_version", MapGraph::kSchemaVersion);
    if (version != MapGraph::kSchemaVersion)
        throw FormatError("unsupported graph schema_version " + std::to_string(version));
    MapGraph graph;
    for (const json& n : j.at("nodes")) {
        MapNode node;
        node.id = NodeId{n.at("id").get<std::int64_t>()};
        node.name = n.at("name").get<std::string>();
        node.group = opt_string(n, "group");
        node.query_count = n.value("query_count", std::uint64_t{0});
        if (auto p = n.find("position"); p != n.end()) node.position = vec_from_json(*p);
        if (!node.position.finite()) throw FormatError("non-finite position");
        if (auto topics = n.find("topics"); topics != n.end()) {
            for (const json& t : *topics) node.topics.push_back(topic_from_json(t));
        }
        for (const TopicText& t : node.topics) {
            if (t.text.empty()) throw FormatError("empty topic text on node " + to_string(node.id));
        }
        graph.insert_node(std::move(node));
    }
    for (const json& e : j.at("edges")) {
        graph.connect(NodeId{e.at(0).get<std::int64_t>()}, NodeId{e.at(1).get<std::int64_t>()});
    }
    if (auto seed = j.find("layout_seed"); seed != j.end() && !seed->is_null())
        graph.set_layout_seed(seed->get<std::int64_t>());
    return graph;
}

json to_json(const Script& script) {
    json steps = json::array();
    for (const ScriptStep& s : script.steps) {
        json step = {{"id", s.step_id}, {"role", s.role.label()}, {"text", s.text}};
        if (s.time) step["time"] = *s.time;
        if (s.node_hint) step["node_hint"] = *s.node_hint;
        steps.push_back(std::move(step));
    }
    return {{"steps", std::move(steps)}};
}

Script script_from_json(const json& j) {
    Script script;
    for (const json& s : j.at("steps")) {
        ScriptStep step;
        step.step_id = s.at("id").get<std::int64_t>();
        step.role = Role(s.at("role").get<std::string>());
        step.time = opt_string(s, "time");
        step.node_hint = opt_string(s, "node_hint");
        step.text = s.at("text").get<std::string>();
        script.steps.push_back(std::move(step));
    }
    script.validate();
    return script;
}

json to_json(const Agent& agent) {
    json out = {{"role", agent.role.label()}, {"speed", agent.speed}, {"color", agent.color}};
    out["position"] = agent.position ? to_json(*agent.position) : json(nullptr);
    out["target_node"] = agent.target_node ? json(agent.target_node->value) : json(nullptr);
    return out;
}

Agent agent_from_json(const json& j) {
    Agent a;
    a.role = Role(j.at("role").get<std::string>());
    a.speed = j.at("speed").get<double>();
    a.color = j.value("color", std::string());
    if (auto p = j.find("position"); p != j.end() && !p->is_null()) a.position = vec_from_json(*p);
    if (auto t = j.find("target_node"); t != j.end() && !t->is_null()) a.target_node = NodeId{t->get<std::int64_t>()};
    return a;
}

json to_json(const TrajectoryRecord& r) {
    json out = {{"step_id", r.step_id},
                {"role", r.role.label()},
                {"match_similarity", r.match_similarity.value()},
                {"node_id", r.node_id.value},
                {"node", r.node},
                {"node_dist", r.node_dist}};
    out["text_similarity"] = r.text_similarity ? json(r.text_similarity->value()) : json(nullptr);
    return out;
}

TrajectoryRecord record_from_json(const json& j) {
    TrajectoryRecord r;
    r.step_id = j.at("step_id").get<std::int64_t>();
    r.role = Role(j.at("role").get<std::string>());
    r.match_similarity = SimilarityScore(j.at("match_similarity").get<double>());
    r.node_id = NodeId{j.value("node_id", std::int64_t{0})};
    r.node = j.at("node").get<std::string>();
    r.node_dist = j.at("node_dist").get<double>();
    if (auto t = j.find("text_similarity"); t != j.end() && !t->is_null())
        r.text_similarity = SimilarityScore(t->get<double>());
    return r;
}

json to_json(const EvaluationState& state) {
    json records = json::array();
    for (const TrajectoryRecord& r : state.records) records.push_back(to_json(r));
    json history = json::array();
    for (const auto& agents : state.history) history.push_back(to_json(agents));
    return {{"cursor", state.cursor},
            {"agents", to_json(state.agents)},
            {"records", std::move(records)},
            {"history", std::move(history)}};
}

EvaluationState state_from_json(const json& j) {
    EvaluationState s;
    s.cursor = j.at("cursor").get<std::size_t>();
    s.agents = agents_from_json(j.at("agents"));
    for (const json& r : j.at("records")) s.records.push_back(record_from_json(r));
    for (const json& h : j.at("history")) s.history.push_back(agents_from_json(h));
    return s;
}

} // namespace codec

// ---------------------------------------------------------------- public helpers

std::string map_document_json(const MapGraph& graph) {
    codec::json doc = {{"schema_version", MapGraph::kSchemaVersion}, {"graph", codec::to_json(graph)}};
    return doc.dump(2) + "\n";
}

MapGraph parse_map_document(std::string_view text) {
    try {
        codec::json doc = codec::json::parse(text);
        if (!doc.contains("graph")) throw FormatError("document has no 'graph' member");
        return codec::graph_from_json(doc.at("graph"));
    } catch (const codec::json::exception& e) {
        throw FormatError(std::string("malformed map document: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("invalid map document: ") + e.what());
    } catch (const NotFound& e) {
        throw FormatError(std::string("invalid map document: ") + e.what());
    }
}

Script parse_script(std::string_view text) {
    try {
        return codec::script_from_json(codec::json::parse(text));
    } catch (const codec::json::exception& e) {
        throw FormatError(std::string("malformed script: ") + e.what());
    }
}

std::string script_to_json(const Script& script) {
    return codec::to_json(script).dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NotFound("cannot write " + path.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

MapGraph load_map_file(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    if (path.extension() == ".gml") return import_gml(text);
    return parse_map_document(text);
}

} // namespace nnm
