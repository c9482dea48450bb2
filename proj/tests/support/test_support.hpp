#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "nnm/document.hpp"
#include "nnm/graph.hpp"
#include "nnm/script.hpp"

namespace nnm::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(NNM_FIXTURE_DIR) / name;
}

inline const char* kCountriesTemplate = "A short list of countries that are nearest to \"{}\", separated by commas:";
inline const char* kRoePrompt =
    "Here's a short list of military rules of engagement like 'It is better to overreact than underreact':";
inline const char* kRoeTemplate = "Here's a short list of military rules of engagement like '{}':";
inline const char* kRoeSeed = "It is better to overreact than underreact";

/// Fresh directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "nnm") {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    std::filesystem::path path_;
};

inline std::string random_word(std::mt19937_64& rng) {
    static const std::vector<std::string> pieces = {
        "north", "Gate", "river", "san", "Marino", "ridge", "\"quoted\"", "back\\slash", "café", "Øst",
        "戦略", "-", "x", "7", "  ", "delta", "Ω", "tab\tbed", "o'neil", "#hash", "[br]", "{brace}"};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::uniform_int_distribution<int> count(1, 3);
    std::string out;
    int n = count(rng);
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += pieces[pick(rng)];
    }
    return out;
}

inline double random_coordinate(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> kind(0, 5);
    switch (kind(rng)) {
    case 0: return 0.0;
    case 1: return std::uniform_real_distribution<double>(-1e-6, 1e-6)(rng);
    case 2: return std::uniform_real_distribution<double>(-1e9, 1e9)(rng);
    case 3: return std::ldexp(std::uniform_real_distribution<double>(-1.0, 1.0)(rng), 200);
    case 4: return static_cast<double>(std::uniform_int_distribution<int>(-1000, 1000)(rng));
    default: return std::uniform_real_distribution<double>(-500.0, 500.0)(rng);
    }
}

/// Random graph of the kind GML can carry: no topic texts, no layout seed.
inline MapGraph random_gml_graph(std::mt19937_64& rng, int max_nodes = 30) {
    MapGraph g;
    std::uniform_int_distribution<int> size(0, max_nodes);
    std::uniform_int_distribution<std::int64_t> gap(1, 4);
    std::uniform_int_distribution<std::uint64_t> qc(0, 50);
    std::bernoulli_distribution has_group(0.5);
    int n = size(rng);
    std::int64_t id = std::uniform_int_distribution<std::int64_t>(0, 10)(rng);
    std::vector<NodeId> ids;
    for (int i = 0; i < n; ++i) {
        MapNode node;
        node.id = NodeId{id};
        id += gap(rng);
        node.name = random_word(rng) + " " + std::to_string(i);
        if (has_group(rng)) node.group = random_word(rng);
        node.query_count = qc(rng);
        node.position = {random_coordinate(rng), random_coordinate(rng)};
        ids.push_back(node.id);
        g.insert_node(std::move(node));
    }
    if (n >= 2) {
        std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
        int edges = std::uniform_int_distribution<int>(0, 2 * n)(rng);
        for (int e = 0; e < edges; ++e) {
            std::size_t a = pick(rng), b = pick(rng);
            if (a != b) g.connect(ids[a], ids[b]);
        }
    }
    return g;
}

inline MapGraph scenario_map() {
    return load_map_file(fixture("scenario_map.json"));
}

inline Script scenario_script() {
    return parse_script(read_text_file(fixture("scenario_script.json")));
}

/// The reference trajectory table, loaded as records.
inline std::vector<TrajectoryRecord> trajectory_records() {
    auto doc = nlohmann::json::parse(read_text_file(fixture("trajectory_records.json")));
    std::vector<TrajectoryRecord> out;
    for (const auto& r : doc.at("records")) {
        TrajectoryRecord rec;
        rec.step_id = r.at("step_id").get<std::int64_t>();
        rec.role = Role(r.at("role").get<std::string>());
        rec.match_similarity = SimilarityScore(r.at("match_similarity").get<double>());
        rec.node = r.at("node").get<std::string>();
        rec.node_dist = r.at("node_dist").get<double>();
        if (!r.at("text_similarity").is_null()) rec.text_similarity = SimilarityScore(r.at("text_similarity").get<double>());
        out.push_back(rec);
    }
    return out;
}

/// An httplib server on an ephemeral loopback port for the duration of a test.
class LocalServer {
public:
    explicit LocalServer(const std::function<void(httplib::Server&)>& routes) {
        routes(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    LocalServer(const LocalServer&) = delete;
    LocalServer& operator=(const LocalServer&) = delete;

    int port() const { return port_; }
    std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace nnm::testing
