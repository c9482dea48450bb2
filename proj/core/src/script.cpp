#include "nnm/script.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "nnm/errors.hpp"

namespace nnm {

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace

Role::Role(std::string label) : label_(std::move(label)) {}

std::string role_color(const Role& role) {
    if (role.is_commander()) return "#1f77b4";
    if (role == Role::subordinate()) return "#d62728";
    return "#7f7f7f";
}

void Script::validate() const {
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const ScriptStep& s = steps[i];
        if (s.step_id < 1) throw FormatError("step ids must be positive");
        if (i > 0 && s.step_id <= steps[i - 1].step_id)
            throw FormatError("step ids must strictly increase (step " + std::to_string(s.step_id) + ")");
        if (s.role.label().empty()) throw FormatError("step " + std::to_string(s.step_id) + " has no role");
        if (s.text.empty()) throw FormatError("step " + std::to_string(s.step_id) + " has no text");
    }
}

Vec2 animate(Vec2 position, Vec2 target, double speed, double dt) {
    if (!(dt >= 0.0)) throw InvalidArgument("dt must be non-negative");
    if (!(speed > 0.0)) throw InvalidArgument("speed must be positive");
    Vec2 delta = target - position;
    double remaining = delta.length();
    double reach = speed * dt;
    if (reach >= remaining) return target;
    return position + delta * (reach / remaining);
}

// ---------------------------------------------------------------- evaluator

ScriptEvaluator::ScriptEvaluator(MapGraph map, Script script, std::shared_ptr<const Embedder> embedder,
                                 double agent_speed)
    : map_(std::move(map)), script_(std::move(script)), embedder_(std::move(embedder)), agent_speed_(agent_speed) {
    if (!embedder_) throw InvalidArgument("evaluator needs an embedder");
    if (!(agent_speed_ > 0.0)) throw InvalidArgument("agent speed must be positive");
    script_.validate();
}

ScriptEvaluator::ScriptEvaluator(MapGraph map, Script script, std::shared_ptr<const Embedder> embedder,
                                 EvaluationState state, double agent_speed)
    : ScriptEvaluator(std::move(map), std::move(script), std::move(embedder), agent_speed) {
    if (state.cursor > script_.steps.size() || state.records.size() != state.cursor ||
        state.history.size() != state.cursor)
        throw InvalidArgument("evaluation state does not match the script");
    state_ = std::move(state);
}

void ScriptEvaluator::ensure_topics() const {
    if (topics_ready_) return;
    for (const MapNode& n : map_.nodes()) {
        for (const TopicText& t : n.topics) topics_.push_back({n.id, t.text, embedder_->embed(t.text)});
    }
    topics_ready_ = true;
}

Placement ScriptEvaluator::place(const ScriptStep& step) const {
    ensure_topics();
    if (topics_.empty()) throw InvalidArgument("map has no topic texts to match against");
    if (step.text.empty()) throw InvalidArgument("step text is empty");
    Embedding query = embedder_->embed(step.text);
    std::optional<Placement> best;
    for (const TopicRef& t : topics_) {
        SimilarityScore s = t.text == step.text ? SimilarityScore(1.0) : cosine_score(query, t.embedding);
        // Topics are enumerated by ascending node id, so strict > keeps the lowest id on ties.
        if (!best || s > best->score) best = Placement{t.node, s};
    }
    return *best;
}

Vec2 ScriptEvaluator::node_position(NodeId id) const {
    return map_.node(id).position;
}

std::optional<Placement> ScriptEvaluator::first_placement(const Role& role) const {
    if (auto it = first_placement_.find(role.label()); it != first_placement_.end()) return it->second;
    std::optional<Placement> found;
    for (const ScriptStep& s : script_.steps) {
        if (s.role == role) {
            found = place(s);
            break;
        }
    }
    first_placement_.emplace(role.label(), found);
    return found;
}

std::optional<NodeId> ScriptEvaluator::counterpart_node(const Role& role) const {
    auto placed = [this](const Role& r) -> std::optional<NodeId> {
        auto it = state_.agents.find(r.label());
        if (it == state_.agents.end()) return std::nullopt;
        return it->second.target_node;
    };
    if (!role.is_commander()) {
        if (auto node = placed(Role::commander())) return node;
        if (auto p = first_placement(Role::commander())) return p->node;
        return std::nullopt;
    }
    for (auto it = state_.records.rbegin(); it != state_.records.rend(); ++it) {
        if (!it->role.is_commander()) return placed(it->role);
    }
    for (const ScriptStep& s : script_.steps) {
        if (!s.role.is_commander()) {
            if (auto p = first_placement(s.role)) return p->node;
            return std::nullopt;
        }
    }
    return std::nullopt;
}

std::optional<std::string> ScriptEvaluator::reference_commander_text(std::size_t step_index) const {
    for (std::size_t i = step_index + 1; i-- > 0;) {
        if (script_.steps[i].role.is_commander()) return script_.steps[i].text;
    }
    for (std::size_t i = step_index + 1; i < script_.steps.size(); ++i) {
        if (script_.steps[i].role.is_commander()) return script_.steps[i].text;
    }
    return std::nullopt;
}

std::optional<TrajectoryRecord> ScriptEvaluator::advance() {
    if (at_end()) return std::nullopt;
    const std::size_t index = state_.cursor;
    const ScriptStep& step = script_.steps[index];
    Placement placement = place(step);

    std::optional<std::string> reference;
    if (!step.role.is_commander()) reference = reference_commander_text(index);
    std::optional<SimilarityScore> text_sim;
    if (reference) text_sim = similarity(step.text, *reference, *embedder_);

    state_.history.push_back(state_.agents);

    Agent& agent = state_.agents[step.role.label()];
    if (agent.role.label().empty()) {
        agent.role = step.role;
        agent.speed = agent_speed_;
        agent.color = role_color(step.role);
    }
    agent.target_node = placement.node;
    if (!agent.position) agent.position = node_position(placement.node);

    double node_dist = 0.0;
    if (auto other = counterpart_node(step.role))
        node_dist = distance(node_position(placement.node), node_position(*other));

    // Roles that have not spoken yet wait on the node their first step selects.
    for (const ScriptStep& s : script_.steps) {
        if (state_.agents.contains(s.role.label())) continue;
        Agent staged;
        staged.role = s.role;
        staged.speed = agent_speed_;
        staged.color = role_color(s.role);
        if (auto p = first_placement(s.role)) staged.position = node_position(p->node);
        state_.agents.emplace(s.role.label(), std::move(staged));
    }

    TrajectoryRecord record{step.step_id, step.role,  placement.score,
                            placement.node, map_.node(placement.node).name, node_dist,
                            text_sim};
    state_.records.push_back(record);
    ++state_.cursor;
    return record;
}

bool ScriptEvaluator::reverse() {
    if (state_.cursor == 0) return false;
    state_.agents = std::move(state_.history.back());
    state_.history.pop_back();
    state_.records.pop_back();
    --state_.cursor;
    return true;
}

void ScriptEvaluator::reset() {
    state_ = EvaluationState{};
}

void ScriptEvaluator::tick(double dt) {
    for (auto& [label, agent] : state_.agents) {
        if (!agent.target_node || !agent.position) continue;
        agent.position = animate(*agent.position, node_position(*agent.target_node), agent.speed, dt);
    }
}

bool ScriptEvaluator::settled() const {
    for (const auto& [label, agent] : state_.agents) {
        if (!agent.target_node || !agent.position) continue;
        if (*agent.position != node_position(*agent.target_node)) return false;
    }
    return true;
}

// ---------------------------------------------------------------- statistics

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("pearson: series lengths differ");
    if (x.size() < 2) throw InvalidArgument("pearson: need at least two pairs");
    // Streaming co-moment update (Welford) on values shifted by the first pair.
    const double x0 = x[0], y0 = y[0];
    double mean_x = 0.0, mean_y = 0.0, m2x = 0.0, m2y = 0.0, cxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        const double xi = x[i] - x0, yi = y[i] - y0;
        const double dx = xi - mean_x;
        mean_x += dx / n;
        const double dy = yi - mean_y;
        mean_y += dy / n;
        m2x += dx * (xi - mean_x);
        m2y += dy * (yi - mean_y);
        cxy += dx * (yi - mean_y);
    }
    if (m2x <= 0.0 || m2y <= 0.0) return std::nullopt;
    double r = cxy / std::sqrt(m2x * m2y);
    return std::clamp(r, -1.0, 1.0);
}

TrajectoryStats trajectory_stats(std::span<const TrajectoryRecord> records) {
    TrajectoryStats stats;
    stats.table.assign(records.begin(), records.end());
    std::vector<double> dist;
    std::vector<double> text;
    for (const TrajectoryRecord& r : records) {
        if (!r.text_similarity) continue;
        dist.push_back(r.node_dist);
        text.push_back(r.text_similarity->value());
    }
    stats.pairs = dist.size();
    if (stats.pairs < 2) throw InvalidArgument("trajectory statistics need at least two complete records");
    stats.pearson = pearson(dist, text);
    return stats;
}

std::string export_trajectory_csv(std::span<const TrajectoryRecord> records) {
    std::string out = "script_id,role,similarity,node,node_dist,text_similarity\n";
    for (const TrajectoryRecord& r : records) {
        out += std::to_string(r.step_id);
        out += ',';
        out += csv_field(r.role.label());
        out += ',';
        out += fixed(r.match_similarity.value(), 4);
        out += ',';
        out += csv_field(r.node);
        out += ',';
        out += fixed(r.node_dist, 2);
        out += ',';
        out += r.text_similarity ? fixed(r.text_similarity->value(), 4) : "NA";
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------- playback

namespace {

std::optional<double> agent_distance(const EvaluationState& state) {
    auto commander = state.agents.find(Role::commander().label());
    if (commander == state.agents.end() || !commander->second.position) return std::nullopt;
    for (auto it = state.records.rbegin(); it != state.records.rend(); ++it) {
        if (it->role.is_commander()) continue;
        auto other = state.agents.find(it->role.label());
        if (other == state.agents.end() || !other->second.position) return std::nullopt;
        return distance(*commander->second.position, *other->second.position);
    }
    // Nobody else has spoken yet: use the first staged non-commander agent.
    for (const auto& [label, agent] : state.agents) {
        if (!agent.role.is_commander() && agent.position)
            return distance(*commander->second.position, *agent.position);
    }
    return std::nullopt;
}

} // namespace

PlaybackSummary play_script(ScriptEvaluator& evaluator, double dt, int max_frames_per_step) {
    if (!(dt > 0.0)) throw InvalidArgument("frame time must be positive");
    evaluator.reset();
    PlaybackSummary summary;
    double clock = 0.0;
    std::optional<double> latest_text;

    auto sample = [&] {
        if (auto d = agent_distance(evaluator.state())) summary.frames.push_back({clock, *d, latest_text});
    };

    while (auto record = evaluator.advance()) {
        if (record->text_similarity) latest_text = record->text_similarity->value();
        summary.records.push_back(*record);
        sample();
        for (int f = 0; f < max_frames_per_step && !evaluator.settled(); ++f) {
            evaluator.tick(dt);
            clock += dt;
            sample();
        }
    }

    std::size_t complete = 0;
    for (const TrajectoryRecord& r : summary.records) complete += r.text_similarity ? 1 : 0;
    if (complete >= 2) summary.record_pearson = trajectory_stats(summary.records).pearson;

    std::vector<double> d;
    std::vector<double> t;
    for (const FrameSample& s : summary.frames) {
        if (!s.text_similarity) continue;
        d.push_back(s.agent_distance);
        t.push_back(*s.text_similarity);
    }
    if (d.size() >= 2) summary.animated_pearson = pearson(d, t);
    return summary;
}

} // namespace nnm
