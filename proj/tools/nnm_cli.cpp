// nnm: batch driver for building, laying out and evaluating narrative maps,
// and for serving the map studio API.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nnm/backend.hpp"
#include "nnm/builder.hpp"
#include "nnm/document.hpp"
#include "nnm/errors.hpp"
#include "nnm/gml.hpp"
#include "nnm/layout.hpp"
#include "nnm/script.hpp"
#include "nnm/service.hpp"
#include "nnm/similarity.hpp"
#include "nnm/validator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void log_line(std::string_view line) {
    std::cerr << "nnm: " << line << '\n';
}

std::pair<std::string, std::string> split_kind(const std::string& spec) {
    auto colon = spec.find(':');
    if (colon == std::string::npos) return {spec, ""};
    return {spec.substr(0, colon), spec.substr(colon + 1)};
}

struct BackendChoice {
    std::shared_ptr<nnm::GenerationBackend> backend;
    bool deterministic = false;
};

BackendChoice make_backend(const std::string& spec, std::optional<nnm::PromptTemplate> tmpl) {
    auto [kind, arg] = split_kind(spec);
    if (kind == "fixture" && !arg.empty())
        return {std::make_shared<nnm::FixtureBackend>(nnm::FixtureBackend::from_file(arg, std::move(tmpl))), true};
    if (kind == "replay" && !arg.empty())
        return {std::make_shared<nnm::ReplayBackend>(nnm::ReplayBackend::from_file(arg)), true};
    if (kind == "remote" && arg.empty())
        return {std::make_shared<nnm::CompletionClient>(nnm::RemoteConfig::from_env()), false};
    throw UsageError("--backend must be fixture:PATH, replay:PATH or remote, got '" + spec + "'");
}

std::unique_ptr<nnm::ResponseValidator> make_validator(const std::string& spec) {
    auto [kind, arg] = split_kind(spec);
    if (kind == "accept-all" && arg.empty()) return std::make_unique<nnm::AcceptAllValidator>();
    if (kind == "allowlist" && !arg.empty())
        return std::make_unique<nnm::AllowlistValidator>(nnm::AllowlistValidator::from_file(arg));
    if (kind == "wikipedia" && arg.empty()) return std::make_unique<nnm::PageExistenceValidator>();
    throw UsageError("--validator must be accept-all, allowlist:PATH or wikipedia, got '" + spec + "'");
}

std::shared_ptr<const nnm::Embedder> make_embedder(const std::string& kind) {
    if (kind == "hashed") return std::make_shared<nnm::HashedBagEmbedder>();
    if (kind == "remote") return nnm::make_remote_embedder(nnm::RemoteConfig::from_env());
    throw UsageError("--embedder must be hashed or remote, got '" + kind + "'");
}

void write_map(const nnm::MapGraph& graph, const std::filesystem::path& path) {
    if (path.extension() == ".gml")
        nnm::write_text_file(path, nnm::export_gml(graph));
    else
        nnm::write_text_file(path, nnm::map_document_json(graph));
    log_line("wrote " + path.string());
}

std::string format_r(const std::optional<double>& r) {
    if (!r) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *r);
    return buf;
}

// ------------------------------------------------------------------ commands

struct BuildArgs {
    std::string prompt_template;
    std::vector<std::string> seeds;
    int max_queries = 0;
    std::string backend;
    std::string validator = "accept-all";
    std::string out;
    std::string record;
    nnm::LayoutParams layout;
    bool skip_layout = false;
};

int run_build(const BuildArgs& a) {
    nnm::PromptTemplate tmpl(a.prompt_template);
    BackendChoice choice = make_backend(a.backend, tmpl);
    std::shared_ptr<nnm::RecordingBackend> recorder;
    if (!a.record.empty()) {
        recorder = std::make_shared<nnm::RecordingBackend>(choice.backend);
        choice.backend = recorder;
    }
    auto validator = make_validator(a.validator);
    a.layout.validate();

    nnm::BuildConfig config{.prompt_template = tmpl,
                            .initial_seeds = a.seeds,
                            .max_queries = a.max_queries,
                            .retry = nnm::RetryPolicy{},
                            .clock = nnm::wall_clock_ms,
                            .log = log_line};
    if (choice.deterministic) config.clock = [] { return nnm::Timestamp{0}; };

    nnm::MapGraph graph;
    int status = kExitOk;
    try {
        nnm::BuildResult result = nnm::build_map(config, *choice.backend, *validator);
        graph = std::move(result.graph);
        log_line("queries " + std::to_string(result.report.queries) + ", nodes " + std::to_string(graph.node_count()) +
                 ", edges " + std::to_string(graph.edge_count()));
    } catch (const nnm::PartialBuildError& e) {
        log_line(std::string("build stopped early: ") + e.what());
        graph = e.graph();
        status = kExitFailure;
    }
    if (!a.skip_layout && !graph.empty()) {
        nnm::LayoutResult layout = nnm::run_layout(graph, a.layout);
        log_line("layout ran " + std::to_string(layout.iterations_run) + " iterations");
    }
    write_map(graph, a.out + ".gml");
    write_map(graph, a.out + ".json");
    if (recorder) {
        recorder->save(a.record);
        log_line("recorded completions to " + a.record);
    }
    return status;
}

struct LayoutArgs {
    std::string map;
    std::string out;
    nnm::LayoutParams layout;
};

int run_layout_cmd(const LayoutArgs& a) {
    a.layout.validate();
    nnm::MapGraph graph = nnm::load_map_file(a.map);
    nnm::LayoutResult result = nnm::run_layout(graph, a.layout);
    log_line("layout ran " + std::to_string(result.iterations_run) + " iterations over " +
             std::to_string(graph.node_count()) + " nodes");
    write_map(graph, a.out.empty() ? a.map : a.out);
    return kExitOk;
}

struct EvalArgs {
    std::string map;
    std::string script;
    std::string out_csv;
    std::string embedder = "hashed";
    double speed = nnm::kDefaultAgentSpeed;
};

int run_eval(const EvalArgs& a) {
    auto embedder = make_embedder(a.embedder);
    nnm::MapGraph graph = nnm::load_map_file(a.map);
    nnm::Script script = nnm::parse_script(nnm::read_text_file(a.script));
    nnm::ScriptEvaluator evaluator(std::move(graph), std::move(script), embedder, a.speed);
    nnm::PlaybackSummary summary = nnm::play_script(evaluator);

    std::string csv = nnm::export_trajectory_csv(summary.records);
    if (a.out_csv.empty() || a.out_csv == "-") {
        std::cout << csv;
    } else {
        nnm::write_text_file(a.out_csv, csv);
        log_line("wrote " + a.out_csv);
    }
    std::size_t pairs = 0;
    for (const auto& r : summary.records) pairs += r.text_similarity.has_value();
    std::cerr << "pearson(node_dist, text_similarity) over " << pairs << " steps: " << format_r(summary.record_pearson)
              << '\n'
              << "pearson over animated frames: " << format_r(summary.animated_pearson) << '\n';
    return kExitOk;
}

struct ServeArgs {
    std::string addr = "127.0.0.1:8080";
    std::string data_dir = "nnm-data";
    std::string backend = "remote";
    std::string embedder = "hashed";
};

nnm::MapServer* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

int run_serve(const ServeArgs& a) {
    auto colon = a.addr.rfind(':');
    if (colon == std::string::npos) throw UsageError("--addr must be HOST:PORT");
    std::string host = a.addr.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(a.addr.substr(colon + 1));
    } catch (const std::exception&) {
        throw UsageError("--addr has a bad port: " + a.addr);
    }
    if (port < 0 || port > 65535) throw UsageError("--addr port out of range");

    nnm::ServiceOptions options;
    options.data_dir = a.data_dir;
    options.backend = make_backend(a.backend, std::nullopt).backend;
    options.embedder = make_embedder(a.embedder);
    nnm::MapService service(std::move(options));
    nnm::MapServer server(service);
    int bound = server.bind(host, port);
    log_line("serving on " + host + ":" + std::to_string(bound) + ", data in " + a.data_dir);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.listen();
    g_server = nullptr;
    return kExitOk;
}

void add_layout_flags(CLI::App* cmd, nnm::LayoutParams& p) {
    cmd->add_option("--seed", p.seed, "Layout random seed")->capture_default_str();
    cmd->add_option("--iterations", p.iterations, "Layout iterations")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd->add_option("--repulsion", p.repulsion_k, "Repulsion constant")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--gravity", p.gravity_k, "Gravity constant")->check(CLI::NonNegativeNumber)->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural narrative map toolkit"};
    app.require_subcommand(1);

    BuildArgs build;
    auto* cmd_build = app.add_subcommand("build", "Grow a map by iterative prompting, lay it out and save it");
    cmd_build->add_option("--template", build.prompt_template, "Prompt with one {} placeholder")->required();
    cmd_build->add_option("--seeds", build.seeds, "Initial seeds (comma separated or repeated)")
        ->required()
        ->delimiter(',');
    cmd_build->add_option("--max-queries", build.max_queries, "Generation budget")
        ->required()
        ->check(CLI::Range(1, std::numeric_limits<int>::max()));
    cmd_build->add_option("--backend", build.backend, "fixture:PATH | replay:PATH | remote")->required();
    cmd_build->add_option("--validator", build.validator, "accept-all | allowlist:PATH | wikipedia")
        ->capture_default_str();
    cmd_build->add_option("--out", build.out, "Output prefix; writes PREFIX.gml and PREFIX.json")->required();
    cmd_build->add_option("--record", build.record, "Save every completion for later replay");
    cmd_build->add_flag("--no-layout", build.skip_layout, "Keep nodes at the origin");
    add_layout_flags(cmd_build, build.layout);

    LayoutArgs layout;
    auto* cmd_layout = app.add_subcommand("layout", "Recompute node positions of a saved map");
    cmd_layout->add_option("--map", layout.map, "Map document (.json) or GML file")->required();
    cmd_layout->add_option("--out", layout.out, "Output path (default: overwrite --map)");
    add_layout_flags(cmd_layout, layout.layout);

    EvalArgs eval;
    auto* cmd_eval = app.add_subcommand("eval", "Play a script over a map and tabulate the trajectory");
    cmd_eval->add_option("--map", eval.map, "Map document with topic texts")->required();
    cmd_eval->add_option("--script", eval.script, "Script JSON")->required();
    cmd_eval->add_option("--out-csv", eval.out_csv, "Trajectory CSV path (default: stdout)");
    cmd_eval->add_option("--embedder", eval.embedder, "hashed | remote")->capture_default_str();
    cmd_eval->add_option("--speed", eval.speed, "Agent speed in layout units per second")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    ServeArgs serve;
    auto* cmd_serve = app.add_subcommand("serve", "Run the map studio HTTP API");
    cmd_serve->add_option("--addr", serve.addr, "HOST:PORT to listen on")->capture_default_str();
    cmd_serve->add_option("--data-dir", serve.data_dir, "Session document directory")->capture_default_str();
    cmd_serve->add_option("--backend", serve.backend, "fixture:PATH | replay:PATH | remote")->capture_default_str();
    cmd_serve->add_option("--embedder", serve.embedder, "hashed | remote")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*cmd_build) return run_build(build);
        if (*cmd_layout) return run_layout_cmd(layout);
        if (*cmd_eval) return run_eval(eval);
        if (*cmd_serve) return run_serve(serve);
    } catch (const UsageError& e) {
        log_line(e.what());
        return kExitUsage;
    } catch (const nnm::ConfigError& e) {
        log_line(e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        log_line(e.what());
        return kExitFailure;
    }
    return kExitUsage;
}
