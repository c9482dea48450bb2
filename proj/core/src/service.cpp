#include "nnm/service.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>

#include "json_codec.hpp"
#include "nnm/document.hpp"
#include "nnm/errors.hpp"
#include "nnm/gml.hpp"
#include "nnm/prompt.hpp"

namespace nnm {

using codec::json;

namespace {

constexpr double kMaxFrameSeconds = 0.1;

json to_json(const PendingFragment& f) {
    return {{"id", f.id},
            {"text", f.text},
            {"prompt", f.prompt},
            {"seed_node", f.seed_node.value},
            {"created_at", f.created_at}};
}

PendingFragment fragment_from_json(const json& j) {
    PendingFragment f;
    f.id = j.at("id").get<std::int64_t>();
    f.text = j.at("text").get<std::string>();
    f.prompt = j.value("prompt", std::string());
    f.seed_node = NodeId{j.at("seed_node").get<std::int64_t>()};
    f.created_at = j.value("created_at", Timestamp{0});
    return f;
}

json document_to_json(const SessionDocument& doc) {
    json pending = json::array();
    for (const PendingFragment& f : doc.pending) pending.push_back(to_json(f));
    json out = {{"schema_version", SessionDocument::kSchemaVersion},
                {"session_id", doc.session_id},
                {"graph", codec::to_json(doc.graph)},
                {"pending_responses", std::move(pending)},
                {"next_fragment_id", doc.next_fragment_id},
                {"updated_at", doc.updated_at}};
    out["script"] = doc.script ? codec::to_json(*doc.script) : json(nullptr);
    out["evaluation"] = doc.evaluation ? codec::to_json(*doc.evaluation) : json(nullptr);
    return out;
}

SessionDocument document_from_json(const json& j) {
    int version = j.value("schema_version", SessionDocument::kSchemaVersion);
    if (version != SessionDocument::kSchemaVersion)
        throw FormatError("unsupported session schema_version " + std::to_string(version));
    SessionDocument doc;
    doc.session_id = j.at("session_id").get<std::string>();
    doc.graph = codec::graph_from_json(j.at("graph"));
    if (auto p = j.find("pending_responses"); p != j.end()) {
        for (const json& f : *p) doc.pending.push_back(fragment_from_json(f));
    }
    doc.next_fragment_id = j.value("next_fragment_id", std::int64_t{1});
    for (const PendingFragment& f : doc.pending) {
        if (f.id >= doc.next_fragment_id) throw FormatError("fragment id " + std::to_string(f.id) + " not below next_fragment_id");
        if (!doc.graph.contains(f.seed_node)) throw FormatError("fragment seed node missing from graph");
    }
    doc.updated_at = j.value("updated_at", Timestamp{0});
    if (auto s = j.find("script"); s != j.end() && !s->is_null()) doc.script = codec::script_from_json(*s);
    if (auto e = j.find("evaluation"); e != j.end() && !e->is_null()) {
        if (!doc.script) throw FormatError("evaluation state without a script");
        doc.evaluation = codec::state_from_json(*e);
    }
    return doc;
}

bool valid_session_id(std::string_view id) {
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '-' || c == '_';
    });
}

std::string random_session_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return buf;
}

double steady_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

} // namespace

std::string session_to_json(const SessionDocument& doc) {
    return document_to_json(doc).dump(2) + "\n";
}

SessionDocument session_from_json(std::string_view text) {
    try {
        return document_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed session document: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("invalid session document: ") + e.what());
    } catch (const NotFound& e) {
        throw FormatError(std::string("invalid session document: ") + e.what());
    }
}

StepDirection step_direction_from_string(std::string_view text) {
    if (text == "advance") return StepDirection::advance;
    if (text == "reverse") return StepDirection::reverse;
    if (text == "reset") return StepDirection::reset;
    throw InvalidArgument("direction must be advance, reverse or reset, got '" + std::string(text) + "'");
}

// ---------------------------------------------------------------- MapService

struct MapService::Entry {
    mutable std::shared_mutex mu;
    SessionDocument doc;
    std::optional<double> last_frame;
};

MapService::MapService(ServiceOptions options) : options_(std::move(options)) {
    if (options_.data_dir.empty()) throw ConfigError("service needs a data directory");
    std::filesystem::create_directories(options_.data_dir);
    if (!options_.clock) options_.clock = wall_clock_ms;
    if (!options_.frame_clock) options_.frame_clock = steady_seconds;
    if (!options_.id_generator) options_.id_generator = random_session_id;
    if (!options_.embedder) options_.embedder = std::make_shared<HashedBagEmbedder>();
}

MapService::~MapService() = default;

void MapService::persist(const SessionDocument& doc) const {
    write_text_file(options_.data_dir / (doc.session_id + ".json"), session_to_json(doc));
}

std::shared_ptr<MapService::Entry> MapService::entry(const std::string& id) const {
    if (!valid_session_id(id)) throw NotFound("no session '" + id + "'");
    {
        std::shared_lock lock(mu_);
        if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
    }
    std::filesystem::path file = options_.data_dir / (id + ".json");
    if (!std::filesystem::exists(file)) throw NotFound("no session '" + id + "'");
    auto loaded = std::make_shared<Entry>();
    loaded->doc = session_from_json(read_text_file(file));
    if (loaded->doc.session_id != id) throw FormatError("session file " + file.string() + " holds another id");
    std::unique_lock lock(mu_);
    auto [it, inserted] = sessions_.try_emplace(id, std::move(loaded));
    return it->second;
}

std::string MapService::create_session() {
    auto fresh = std::make_shared<Entry>();
    std::unique_lock lock(mu_);
    std::string id;
    for (int attempt = 0;; ++attempt) {
        id = options_.id_generator();
        if (!valid_session_id(id)) throw ConfigError("id generator produced an unusable id '" + id + "'");
        if (!sessions_.count(id) && !std::filesystem::exists(options_.data_dir / (id + ".json"))) break;
        if (attempt > 16) throw Error("could not allocate a fresh session id");
    }
    fresh->doc.session_id = id;
    fresh->doc.updated_at = options_.clock();
    persist(fresh->doc);
    sessions_.emplace(id, std::move(fresh));
    return id;
}

void MapService::require(const std::string& id) const {
    (void)entry(id);
}

SessionDocument MapService::get(const std::string& id) const {
    auto e = entry(id);
    std::shared_lock lock(e->mu);
    return e->doc;
}

void MapService::put(const std::string& id, SessionDocument doc) {
    if (doc.session_id != id) throw InvalidArgument("document session_id '" + doc.session_id + "' does not match '" + id + "'");
    doc.graph.validate();
    if (doc.evaluation && !doc.script) throw InvalidArgument("evaluation state without a script");
    auto e = entry(id);
    std::unique_lock lock(e->mu);
    persist(doc);
    e->doc = std::move(doc);
    e->last_frame.reset();
}

std::vector<PendingFragment> MapService::submit_prompt(const std::string& id, const std::string& prompt_template,
                                                       const std::string& seed,
                                                       const std::optional<std::string>& seed_group) {
    PromptTemplate tmpl(prompt_template);
    if (display_name(seed).empty()) throw InvalidArgument("seed is empty");
    if (!options_.backend) throw ConfigError("service has no generation backend");
    auto e = entry(id);
    std::unique_lock lock(e->mu);
    SessionDocument doc = e->doc;

    std::string prompt = tmpl.render(seed);
    GenerationOutcome outcome = generate_with_retry(*options_.backend, prompt, options_.retry);
    Timestamp now = options_.clock();

    NodeId seed_node = doc.graph.add_node(seed_group ? *seed_group : seed, seed_group);
    if (seed_group) {
        const MapNode& node = doc.graph.node(seed_node);
        bool present = std::any_of(node.topics.begin(), node.topics.end(),
                                   [&](const TopicText& t) { return t.text == seed; });
        if (!present) doc.graph.add_topic(seed_node, TopicText{seed, TopicSource::manual, std::nullopt, now});
    }
    doc.graph.bump_query_count(seed_node);

    for (std::string& text : parse_fragments(outcome.text)) {
        bool known = std::any_of(doc.pending.begin(), doc.pending.end(),
                                 [&](const PendingFragment& f) { return f.text == text; });
        if (known) continue;
        doc.pending.push_back(PendingFragment{doc.next_fragment_id++, std::move(text), prompt, seed_node, now});
    }
    doc.updated_at = now;
    persist(doc);
    e->doc = std::move(doc);
    return e->doc.pending;
}

NodeId MapService::assign_fragment(const std::string& id, std::int64_t fragment_id, const std::string& node_name) {
    auto e = entry(id);
    std::unique_lock lock(e->mu);
    SessionDocument doc = e->doc;
    auto it = std::find_if(doc.pending.begin(), doc.pending.end(),
                           [&](const PendingFragment& f) { return f.id == fragment_id; });
    if (it == doc.pending.end()) throw NotFound("fragment " + std::to_string(fragment_id) + " is not pending");
    NodeId target = doc.graph.add_node(node_name);
    doc.graph.add_topic(target, TopicText{it->text, TopicSource::generated, it->prompt, it->created_at});
    if (target != it->seed_node) doc.graph.connect(it->seed_node, target);
    doc.pending.erase(it);
    doc.updated_at = options_.clock();
    persist(doc);
    e->doc = std::move(doc);
    return target;
}

LayoutResult MapService::layout(const std::string& id, const LayoutParams& params) {
    params.validate();
    auto e = entry(id);
    std::unique_lock lock(e->mu);
    SessionDocument doc = e->doc;
    LayoutResult result = run_layout(doc.graph, params);
    doc.updated_at = options_.clock();
    persist(doc);
    e->doc = std::move(doc);
    return result;
}

std::vector<SimilarHit> MapService::similar(const std::string& id, const std::string& text, std::size_t k) const {
    auto e = entry(id);
    std::shared_lock lock(e->mu);
    const MapGraph& graph = e->doc.graph;
    std::vector<Candidate> candidates;
    std::vector<std::pair<NodeId, const std::string*>> origin;
    for (const MapNode& node : graph.nodes()) {
        for (const TopicText& t : node.topics) {
            candidates.push_back({static_cast<std::int64_t>(candidates.size()), t.text});
            origin.emplace_back(node.id, &t.text);
        }
    }
    std::vector<SimilarHit> hits;
    for (const Ranked& r : find_closest(text, candidates, *options_.embedder, k)) {
        const auto& [node, topic] = origin[static_cast<std::size_t>(r.id)];
        hits.push_back({node, graph.node(node).name, *topic, r.score});
    }
    return hits;
}

void MapService::load_script(const std::string& id, Script script) {
    script.validate();
    auto e = entry(id);
    std::unique_lock lock(e->mu);
    SessionDocument doc = e->doc;
    doc.script = std::move(script);
    doc.evaluation = EvaluationState{};
    doc.updated_at = options_.clock();
    persist(doc);
    e->doc = std::move(doc);
    e->last_frame.reset();
}

StepResult MapService::step_script(const std::string& id, StepDirection direction) {
    auto e = entry(id);
    std::unique_lock lock(e->mu);
    SessionDocument doc = e->doc;
    if (!doc.script) throw InvalidArgument("no script loaded");
    ScriptEvaluator evaluator(doc.graph, *doc.script, options_.embedder,
                              doc.evaluation.value_or(EvaluationState{}));
    StepResult result;
    switch (direction) {
    case StepDirection::advance:
        result.record = evaluator.advance();
        result.moved = result.record.has_value();
        break;
    case StepDirection::reverse:
        result.moved = evaluator.reverse();
        break;
    case StepDirection::reset:
        result.moved = evaluator.cursor() > 0 || !evaluator.state().agents.empty();
        evaluator.reset();
        break;
    }
    result.cursor = evaluator.cursor();
    doc.evaluation = evaluator.state();
    doc.updated_at = options_.clock();
    persist(doc);
    e->doc = std::move(doc);
    return result;
}

FrameView MapService::get_frame(const std::string& id) {
    auto e = entry(id);
    std::unique_lock lock(e->mu);
    FrameView view;
    if (!e->doc.script) return view;
    double now = options_.frame_clock();
    double dt = e->last_frame ? std::clamp(now - *e->last_frame, 0.0, kMaxFrameSeconds) : 0.0;
    e->last_frame = now;

    ScriptEvaluator evaluator(e->doc.graph, *e->doc.script, options_.embedder,
                              e->doc.evaluation.value_or(EvaluationState{}));
    if (dt > 0.0 && !evaluator.settled()) {
        evaluator.tick(dt);
        SessionDocument doc = e->doc;
        doc.evaluation = evaluator.state();
        persist(doc);
        e->doc = std::move(doc);
    }
    const EvaluationState& state = evaluator.state();
    view.cursor = state.cursor;
    view.length = e->doc.script->steps.size();
    for (const auto& [label, agent] : state.agents) {
        if (agent.position) view.agents.push_back(agent);
    }
    view.records = state.records;
    return view;
}

std::string MapService::trajectory_csv(const std::string& id) const {
    auto e = entry(id);
    std::shared_lock lock(e->mu);
    if (!e->doc.evaluation) return export_trajectory_csv({});
    return export_trajectory_csv(e->doc.evaluation->records);
}

std::string MapService::export_gml(const std::string& id) const {
    auto e = entry(id);
    std::shared_lock lock(e->mu);
    return nnm::export_gml(e->doc.graph);
}

// ---------------------------------------------------------------- HTTP

struct MapServer::Impl {
    MapService& service;
    httplib::Server server;
    std::thread worker;
    std::atomic<bool> bound{false};

    explicit Impl(MapService& s) : service(s) { routes(); }

    static void send_json(httplib::Response& res, const json& body, int status = 200) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static json body_of(const httplib::Request& req) {
        if (req.body.empty()) return json::object();
        json j = json::parse(req.body);
        if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
        return j;
    }

    template <class Fn>
    void guarded(httplib::Response& res, Fn&& fn) {
        auto fail = [&](int status, const std::string& message) {
            send_json(res, {{"error", message}, {"status", status}}, status);
        };
        try {
            fn();
        } catch (const NotFound& e) {
            fail(404, e.what());
        } catch (const BackendError& e) {
            fail(502, e.what());
        } catch (const InvalidArgument& e) {
            fail(400, e.what());
        } catch (const ConfigError& e) {
            fail(400, e.what());
        } catch (const FormatError& e) {
            fail(400, e.what());
        } catch (const GmlParseError& e) {
            fail(400, e.what());
        } catch (const json::exception& e) {
            fail(400, std::string("bad request body: ") + e.what());
        } catch (const std::exception& e) {
            fail(500, e.what());
        }
    }

    static json frame_json(const FrameView& view) {
        json agents = json::array();
        for (const Agent& a : view.agents) agents.push_back(codec::to_json(a));
        json records = json::array();
        for (const TrajectoryRecord& r : view.records) records.push_back(codec::to_json(r));
        return {{"cursor", view.cursor}, {"length", view.length}, {"agents", std::move(agents)},
                {"records", std::move(records)}};
    }

    void routes() {
        const std::string sid = "/sessions/([A-Za-z0-9_-]+)";

        server.Post("/sessions", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] { send_json(res, {{"session_id", service.create_session()}}, 201); });
        });
        server.Get(sid, [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                res.set_content(session_to_json(service.get(req.matches[1])), "application/json");
            });
        });
        server.Put(sid, [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                service.require(req.matches[1]);
                service.put(req.matches[1], session_from_json(req.body));
                send_json(res, {{"ok", true}});
            });
        });
        server.Post(sid + "/prompt", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                service.require(req.matches[1]);
                json body = body_of(req);
                std::optional<std::string> group;
                if (auto g = body.find("seed_group"); g != body.end() && !g->is_null()) group = g->get<std::string>();
                auto pending = service.submit_prompt(req.matches[1], body.at("template").get<std::string>(),
                                                     body.at("seed").get<std::string>(), group);
                json list = json::array();
                for (const PendingFragment& f : pending) {
                    list.push_back({{"id", f.id}, {"text", f.text}, {"prompt", f.prompt}, {"seed_node", f.seed_node.value}});
                }
                send_json(res, {{"pending", std::move(list)}});
            });
        });
        server.Post(sid + "/fragments/([0-9]+)/assign", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                service.require(req.matches[1]);
                json body = body_of(req);
                std::int64_t fid = std::stoll(req.matches[2]);
                NodeId node = service.assign_fragment(req.matches[1], fid, body.at("node").get<std::string>());
                send_json(res, {{"node_id", node.value}});
            });
        });
        server.Post(sid + "/layout", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                service.require(req.matches[1]);
                json body = body_of(req);
                LayoutParams p;
                p.repulsion_k = body.value("repulsion_k", p.repulsion_k);
                p.gravity_k = body.value("gravity_k", p.gravity_k);
                p.iterations = body.value("iterations", p.iterations);
                p.step_decay = body.value("step_decay", p.step_decay);
                p.seed = body.value("seed", p.seed);
                LayoutResult r = service.layout(req.matches[1], p);
                json positions = json::array();
                for (std::size_t i = 0; i < r.ids.size(); ++i) {
                    positions.push_back({{"id", r.ids[i].value}, {"x", r.positions[i].x}, {"y", r.positions[i].y}});
                }
                send_json(res, {{"positions", std::move(positions)}, {"iterations_run", r.iterations_run}});
            });
        });
        server.Post(sid + "/similar", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                service.require(req.matches[1]);
                json body = body_of(req);
                long long k = body.value("k", 5LL);
                if (k < 1) throw InvalidArgument("k must be at least 1");
                json list = json::array();
                for (const SimilarHit& h : service.similar(req.matches[1], body.at("text").get<std::string>(),
                                                           static_cast<std::size_t>(k))) {
                    list.push_back({{"node_id", h.node.value}, {"node", h.node_name}, {"text", h.text},
                                    {"score", h.score.value()}});
                }
                send_json(res, {{"results", std::move(list)}});
            });
        });
        server.Put(sid + "/script", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                service.require(req.matches[1]);
                Script script = parse_script(req.body);
                std::size_t n = script.steps.size();
                service.load_script(req.matches[1], std::move(script));
                send_json(res, {{"steps", n}});
            });
        });
        server.Post(sid + "/script/step", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                service.require(req.matches[1]);
                json body = body_of(req);
                StepResult r = service.step_script(
                    req.matches[1], step_direction_from_string(body.at("direction").get<std::string>()));
                send_json(res, {{"moved", r.moved},
                                {"cursor", r.cursor},
                                {"record", r.record ? codec::to_json(*r.record) : json(nullptr)}});
            });
        });
        server.Get(sid + "/frame", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, frame_json(service.get_frame(req.matches[1]))); });
        });
        server.Get(sid + "/trajectory.csv", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { res.set_content(service.trajectory_csv(req.matches[1]), "text/csv"); });
        });
        server.Get(sid + "/export.gml", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { res.set_content(service.export_gml(req.matches[1]), "text/plain"); });
        });
    }
};

MapServer::MapServer(MapService& service) : impl_(std::make_unique<Impl>(service)) {}

MapServer::~MapServer() {
    stop();
}

int MapServer::bind(const std::string& host, int port) {
    int bound_port = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound_port < 0) throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
    impl_->bound = true;
    return bound_port;
}

void MapServer::listen() {
    if (!impl_->bound) throw ConfigError("listen() before bind()");
    impl_->server.listen_after_bind();
}

int MapServer::start(const std::string& host, int port) {
    int p = bind(host, port);
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return p;
}

void MapServer::stop() {
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

} // namespace nnm
