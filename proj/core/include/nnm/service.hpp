#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "nnm/backend.hpp"
#include "nnm/graph.hpp"
#include "nnm/layout.hpp"
#include "nnm/script.hpp"
#include "nnm/similarity.hpp"

namespace nnm {

/// A generated fragment awaiting assignment to a topic node.
struct PendingFragment {
    std::int64_t id = 0;
    std::string text;
    std::string prompt;
    NodeId seed_node;
    Timestamp created_at = 0;

    bool operator==(const PendingFragment&) const = default;
};

struct SessionDocument {
    static constexpr int kSchemaVersion = 1;

    std::string session_id;
    MapGraph graph;
    std::vector<PendingFragment> pending;
    std::int64_t next_fragment_id = 1;
    std::optional<Script> script;
    std::optional<EvaluationState> evaluation;
    Timestamp updated_at = 0;

    bool operator==(const SessionDocument&) const = default;
};

std::string session_to_json(const SessionDocument& doc);
/// Throws FormatError on schema violations.
SessionDocument session_from_json(std::string_view json);

struct SimilarHit {
    NodeId node;
    std::string node_name;
    std::string text;
    SimilarityScore score;

    bool operator==(const SimilarHit&) const = default;
};

enum class StepDirection { advance, reverse, reset };
StepDirection step_direction_from_string(std::string_view text);

struct StepResult {
    bool moved = false; ///< false when stepping past either end
    std::size_t cursor = 0;
    std::optional<TrajectoryRecord> record; ///< set by a successful advance
};

struct FrameView {
    std::size_t cursor = 0;
    std::size_t length = 0;
    std::vector<Agent> agents; ///< only agents that are shown
    std::vector<TrajectoryRecord> records;
};

struct ServiceOptions {
    std::filesystem::path data_dir;
    std::shared_ptr<GenerationBackend> backend;
    std::shared_ptr<const Embedder> embedder;
    RetryPolicy retry;
    Clock clock = wall_clock_ms;
    /// Monotonic seconds for frame timing.
    std::function<double()> frame_clock;
    /// Produces new session ids; random 16-hex-digit tokens by default.
    std::function<std::string()> id_generator;
};

/// Session store plus the builder/viewer operations, independent of transport.
///
/// Sessions live in memory and are written to `<data_dir>/<id>.json` after
/// every mutation; unknown ids are looked up on disk before failing with
/// NotFound. Each session is guarded by its own reader/writer lock.
class MapService {
public:
    explicit MapService(ServiceOptions options);
    ~MapService();

    MapService(const MapService&) = delete;
    MapService& operator=(const MapService&) = delete;

    std::string create_session();
    SessionDocument get(const std::string& id) const;
    /// Throws NotFound unless the session is in memory or on disk.
    void require(const std::string& id) const;
    /// Replaces the stored document. The document's session_id must match.
    void put(const std::string& id, SessionDocument doc);

    /// Renders the template with `seed`, generates, splits the completion into
    /// fragments and queues the new ones (deduplicated by text). The seed node
    /// is `seed_group` when given (created in that group if absent), else the
    /// seed itself. Returns the whole pending list.
    std::vector<PendingFragment> submit_prompt(const std::string& id, const std::string& prompt_template,
                                               const std::string& seed,
                                               const std::optional<std::string>& seed_group);

    /// Moves a pending fragment onto `node_name` (created if needed) as a
    /// topic text and links the fragment's seed node to it.
    NodeId assign_fragment(const std::string& id, std::int64_t fragment_id, const std::string& node_name);

    LayoutResult layout(const std::string& id, const LayoutParams& params);
    std::vector<SimilarHit> similar(const std::string& id, const std::string& text, std::size_t k) const;
    void load_script(const std::string& id, Script script);
    StepResult step_script(const std::string& id, StepDirection direction);
    /// Ticks the animation by the wall-clock time since the previous frame,
    /// capped at 100 ms, and returns the agents and records.
    FrameView get_frame(const std::string& id);
    std::string trajectory_csv(const std::string& id) const;
    std::string export_gml(const std::string& id) const;

    const std::filesystem::path& data_dir() const { return options_.data_dir; }

private:
    struct Entry;

    std::shared_ptr<Entry> entry(const std::string& id) const;
    void persist(const SessionDocument& doc) const;

    ServiceOptions options_;
    mutable std::shared_mutex mu_;
    mutable std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// JSON-over-HTTP front end for a MapService.
class MapServer {
public:
    explicit MapServer(MapService& service);
    ~MapServer();

    MapServer(const MapServer&) = delete;
    MapServer& operator=(const MapServer&) = delete;

    /// Binds the listening socket; port 0 picks a free port. Returns the port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    /// bind() + listen() on a background thread. Returns the port.
    int start(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace nnm
