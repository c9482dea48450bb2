#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nnm/geometry.hpp"
#include "nnm/graph.hpp"
#include "nnm/similarity.hpp"

namespace nnm {

/// Speaker label of a script step. COMMANDER and SUBORDINATE are the two
/// built-in roles; any other non-empty label is accepted and treated like a
/// subordinate.
class Role {
public:
    Role() = default;
    explicit Role(std::string label);

    static Role commander() { return Role("COMMANDER"); }
    static Role subordinate() { return Role("SUBORDINATE"); }

    const std::string& label() const { return label_; }
    bool is_commander() const { return label_ == "COMMANDER"; }

    auto operator<=>(const Role&) const = default;

private:
    std::string label_;
};

struct ScriptStep {
    std::int64_t step_id = 0;
    Role role;
    std::optional<std::string> time;
    std::optional<std::string> node_hint; ///< expected node; never used for placement
    std::string text;

    bool operator==(const ScriptStep&) const = default;
};

struct Script {
    std::vector<ScriptStep> steps;

    /// Throws FormatError unless step ids strictly increase, roles are
    /// non-empty and every text is non-empty.
    void validate() const;
    bool operator==(const Script&) const = default;
};

/// `{"steps":[{"id":1,"role":"COMMANDER","time":"0500","node_hint":"careful","text":"..."}]}`
Script parse_script(std::string_view json);
std::string script_to_json(const Script& script);

inline constexpr double kDefaultAgentSpeed = 100.0;     ///< layout units per second
inline constexpr double kHeadlessFrameSeconds = 1.0 / 60.0;

struct Agent {
    Role role;
    std::optional<Vec2> position;     ///< absent until the agent is shown
    std::optional<NodeId> target_node;
    double speed = kDefaultAgentSpeed;
    std::string color;

    bool operator==(const Agent&) const = default;
};

std::string role_color(const Role& role);

/// One row of the trajectory table.
struct TrajectoryRecord {
    std::int64_t step_id = 0;
    Role role;
    SimilarityScore match_similarity;
    NodeId node_id;
    std::string node;
    double node_dist = 0.0;
    std::optional<SimilarityScore> text_similarity; ///< absent for COMMANDER rows

    bool operator==(const TrajectoryRecord&) const = default;
};

struct Placement {
    NodeId node;
    SimilarityScore score;

    bool operator==(const Placement&) const = default;
};

/// Everything that changes while a script plays.
struct EvaluationState {
    std::size_t cursor = 0;
    std::map<std::string, Agent> agents; ///< by role label
    std::vector<TrajectoryRecord> records;
    /// Agent sets as they were before each advance; history.size() == cursor.
    std::vector<std::map<std::string, Agent>> history;

    bool operator==(const EvaluationState&) const = default;
};

/// p_new = p_old + v̂·s·Δt toward `target`, snapping onto the target when
/// s·Δt reaches it. Throws InvalidArgument for dt < 0 or speed <= 0.
Vec2 animate(Vec2 position, Vec2 target, double speed, double dt);

/// Plays a script over a map, placing each step's speaker on the node whose
/// topic text best matches the step text.
///
/// node_dist is measured between the speaker's target node and its
/// counterpart's (COMMANDER pairs with the most recently placed other role,
/// every other role pairs with COMMANDER). A counterpart that has not spoken
/// yet is taken to stand on the node its first step will select. For
/// non-COMMANDER steps, text_similarity compares against the latest
/// COMMANDER text at or before the step (or the first one after it when the
/// commander has not spoken yet).
class ScriptEvaluator {
public:
    ScriptEvaluator(MapGraph map, Script script, std::shared_ptr<const Embedder> embedder,
                    double agent_speed = kDefaultAgentSpeed);

    /// Resumes from a saved state. Throws InvalidArgument if the state does
    /// not fit the script.
    ScriptEvaluator(MapGraph map, Script script, std::shared_ptr<const Embedder> embedder, EvaluationState state,
                    double agent_speed = kDefaultAgentSpeed);

    /// Best-matching node for the step text over every topic text of the map,
    /// ties to the lower node id. Throws InvalidArgument if the map has no
    /// topic texts.
    Placement place(const ScriptStep& step) const;

    /// Consumes the next step. Returns nullopt (and changes nothing) at the end.
    std::optional<TrajectoryRecord> advance();
    /// Undoes the last advance exactly. Returns false at the start.
    bool reverse();
    void reset();

    /// Moves every targeted agent toward its node for `dt` seconds.
    void tick(double dt);
    /// True when every targeted agent sits on its node.
    bool settled() const;

    const EvaluationState& state() const { return state_; }
    const Script& script() const { return script_; }
    const MapGraph& map() const { return map_; }
    std::size_t cursor() const { return state_.cursor; }
    bool at_end() const { return state_.cursor >= script_.steps.size(); }

private:
    struct TopicRef {
        NodeId node;
        std::string text;
        Embedding embedding;
    };

    void ensure_topics() const;
    Vec2 node_position(NodeId id) const;
    std::optional<Placement> first_placement(const Role& role) const;
    std::optional<NodeId> counterpart_node(const Role& role) const;
    std::optional<std::string> reference_commander_text(std::size_t step_index) const;

    MapGraph map_;
    Script script_;
    std::shared_ptr<const Embedder> embedder_;
    double agent_speed_;
    EvaluationState state_;
    mutable std::vector<TopicRef> topics_;
    mutable bool topics_ready_ = false;
    mutable std::map<std::string, std::optional<Placement>> first_placement_;
};

/// Pearson's r over paired samples, computed in one streaming pass.
/// Returns nullopt when either series is constant. Throws InvalidArgument on
/// length mismatch or fewer than two pairs.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct TrajectoryStats {
    std::optional<double> pearson; ///< node_dist vs text_similarity; nullopt if undefined
    std::size_t pairs = 0;
    std::vector<TrajectoryRecord> table;
};

/// Pearson over the records that carry a text similarity. Throws
/// InvalidArgument with fewer than two such records.
TrajectoryStats trajectory_stats(std::span<const TrajectoryRecord> records);

/// `script_id,role,similarity,node,node_dist,text_similarity`; similarities
/// with 4 decimals, distances with 2, `NA` for a missing text similarity.
std::string export_trajectory_csv(std::span<const TrajectoryRecord> records);

/// One animation frame of a headless playback.
struct FrameSample {
    double time = 0.0;
    double agent_distance = 0.0; ///< between the two agents' current positions
    std::optional<double> text_similarity; ///< latest subordinate-vs-commander value
};

struct PlaybackSummary {
    std::vector<TrajectoryRecord> records;
    std::vector<FrameSample> frames;
    std::optional<double> record_pearson;   ///< over the records
    std::optional<double> animated_pearson; ///< over the frame series
};

/// Advances through the whole script, ticking `dt`-second frames after each
/// step until the agents settle (at most `max_frames_per_step`).
PlaybackSummary play_script(ScriptEvaluator& evaluator, double dt = kHeadlessFrameSeconds,
                            int max_frames_per_step = 600);

} // namespace nnm
