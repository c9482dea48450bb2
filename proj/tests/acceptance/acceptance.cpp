// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "nnm/builder.hpp"
#include "nnm/document.hpp"
#include "nnm/errors.hpp"
#include "nnm/gml.hpp"
#include "nnm/layout.hpp"
#include "nnm/script.hpp"
#include "nnm/service.hpp"
#include "nnm/similarity.hpp"
#include "nnm/validator.hpp"
#include "test_support.hpp"

using namespace nnm;
using Stopwatch = std::chrono::steady_clock;
using nlohmann::json;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

int failures = 0;

void report(const char* name, Outcome outcome, Stopwatch::time_point start) {
    double ms = std::chrono::duration<double, std::milli>(Stopwatch::now() - start).count();
    std::printf("[%s] %-24s %9.1f ms  %s\n", outcome.ok ? "PASS" : "FAIL", name, ms, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.ok) ++failures;
}

template <class Fn>
void criterion(const char* name, Fn&& body) {
    auto start = Stopwatch::now();
    Outcome outcome;
    try {
        body(outcome);
    } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.detail = std::string("exception: ") + e.what();
    }
    report(name, outcome, start);
}

double elapsed_s(Stopwatch::time_point since) {
    return std::chrono::duration<double>(Stopwatch::now() - since).count();
}

class TableBackend : public GenerationBackend {
public:
    explicit TableBackend(std::map<std::string, std::string> table) : table_(std::move(table)) {}
    std::string generate(const std::string& prompt) override {
        calls.push_back(prompt);
        auto it = table_.find(name_key(prompt));
        return it == table_.end() ? std::string() : it->second;
    }
    std::vector<std::string> calls;

private:
    std::map<std::string, std::string> table_;
};

BuildConfig plain_config(std::string tmpl, std::vector<std::string> seeds, int max_queries) {
    return BuildConfig{.prompt_template = PromptTemplate(std::move(tmpl)),
                       .initial_seeds = std::move(seeds),
                       .max_queries = max_queries,
                       .retry = RetryPolicy{1, std::chrono::milliseconds(0), 1.0, {}},
                       .clock = [] { return Timestamp{0}; },
                       .log = {}};
}

double two_pass_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

std::string sentence(std::mt19937_64& rng) {
    static const std::vector<std::string> words = {"hold", "fire", "enemy", "duty", "Careful", "target",
                                                   "verify", "orders,", "the", "base.", "engage", "lawful"};
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::string out;
    for (int i = std::uniform_int_distribution<int>(1, 8)(rng); i > 0; --i) out += (out.empty() ? "" : " ") + words[pick(rng)];
    return out;
}

// ------------------------------------------------------------------ criteria

void builder_fidelity(Outcome& o) {
    const std::set<std::pair<std::string, std::string>> borders = {
        {"Belize", "Guatemala"},     {"Belize", "Mexico"},      {"El Salvador", "Guatemala"},
        {"El Salvador", "Honduras"}, {"Guatemala", "Honduras"}, {"Guatemala", "Mexico"},
        {"Costa Rica", "Nicaragua"}, {"Honduras", "Nicaragua"}, {"Costa Rica", "Panama"}};
    const std::set<std::string> countries = {"Mexico",   "Guatemala", "Belize",     "El Salvador",
                                             "Honduras", "Nicaragua", "Costa Rica", "Panama"};
    auto start = Stopwatch::now();
    FixtureBackend backend = FixtureBackend::from_file(testing::fixture("central_america.tsv"),
                                                       PromptTemplate(testing::kCountriesTemplate));
    AcceptAllValidator validator;
    BuildResult r = build_map(plain_config(testing::kCountriesTemplate, {"Mexico"}, 8), backend, validator);
    double seconds = elapsed_s(start);

    std::set<std::string> names;
    for (const MapNode& n : r.graph.nodes()) names.insert(n.name);
    std::set<std::pair<std::string, std::string>> edges;
    for (const MapEdge& e : r.graph.edges()) {
        std::string a = r.graph.node(e.source).name, b = r.graph.node(e.target).name;
        edges.insert(a < b ? std::pair{a, b} : std::pair{b, a});
    }
    o.require(names == countries, "node set differs");
    o.require(edges == borders, "adjacency differs");
    o.require(seconds < 1.0, "build took " + std::to_string(seconds) + " s");
    o.detail = o.ok ? "8 nodes, 9 borders" : o.detail;
}

void no_requery(Outcome& o) {
    std::mt19937_64 rng(2024);
    const std::vector<std::string> vocab = {"ash", "birch", "cedar", "dogwood", "elm", "fir", "ginkgo",
                                            "hazel", "ivy", "juniper", "kapok", "larch", "maple", "nutmeg"};
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    for (int round = 0; round < 100 && o.ok; ++round) {
        std::map<std::string, std::string> table;
        for (const std::string& w : vocab) {
            std::string items;
            for (int i = std::uniform_int_distribution<int>(0, 6)(rng); i > 0; --i) {
                std::string item = vocab[pick(rng)];
                if (rng() % 3 == 0) item[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(item[0])));
                items += (items.empty() ? "" : ", ") + item;
            }
            table[w] = items;
        }
        int budget = std::uniform_int_distribution<int>(1, 20)(rng);
        TableBackend backend(table);
        AcceptAllValidator validator;
        build_map(plain_config("{}", {vocab[pick(rng)], vocab[pick(rng)]}, budget), backend, validator);
        std::set<std::string> seen;
        for (const std::string& c : backend.calls) o.require(seen.insert(name_key(c)).second, "seed '" + c + "' consumed twice");
        o.require(static_cast<int>(backend.calls.size()) <= budget, "budget exceeded in round " + std::to_string(round));
    }
    if (o.ok) o.detail = "100 tables";
}

void gml_round_trip(Outcome& o) {
    std::mt19937_64 rng(31337);
    for (int i = 0; i < 200 && o.ok; ++i) {
        MapGraph g = testing::random_gml_graph(rng);
        std::string text = export_gml(g);
        MapGraph back = import_gml(text);
        o.require(back == g, "graph " + std::to_string(i) + " changed in round trip");
        o.require(export_gml(g) == text, "export " + std::to_string(i) + " not repeatable");
        o.require(export_gml(back) == text, "re-export " + std::to_string(i) + " differs");
    }
    if (o.ok) o.detail = "200 graphs";
}

void layout_separation(Outcome& o) {
    MapGraph g;
    std::vector<NodeId> left, right;
    for (int i = 0; i < 5; ++i) left.push_back(g.add_node("L" + std::to_string(i)));
    for (int i = 0; i < 5; ++i) right.push_back(g.add_node("R" + std::to_string(i)));
    for (auto* side : {&left, &right})
        for (std::size_t a = 0; a < 5; ++a)
            for (std::size_t b = a + 1; b < 5; ++b) g.connect((*side)[a], (*side)[b]);
    g.connect(left[0], right[0]);

    auto start = Stopwatch::now();
    double worst_ratio = 0;
    for (std::int64_t seed = 1; seed <= 10; ++seed) {
        LayoutParams params;
        params.seed = seed;
        LayoutResult a = compute_layout(g, params), b = compute_layout(g, params);
        o.require(a.positions == b.positions, "seed " + std::to_string(seed) + " not deterministic");
        for (const Vec2& p : a.positions) o.require(p.finite(), "non-finite position");
        double intra = 0, inter = 0;
        int n_intra = 0, n_inter = 0;
        for (std::size_t i = 0; i < 10; ++i) {
            for (std::size_t j = i + 1; j < 10; ++j) {
                double d = distance(a.positions[i], a.positions[j]);
                if ((i < 5) == (j < 5)) {
                    intra += d;
                    ++n_intra;
                } else {
                    inter += d;
                    ++n_inter;
                }
            }
        }
        intra /= n_intra;
        inter /= n_inter;
        worst_ratio = std::max(worst_ratio, intra / inter);
        o.require(intra < inter, "seed " + std::to_string(seed) + ": intra " + std::to_string(intra) + " >= inter " +
                                     std::to_string(inter));
    }
    double seconds = elapsed_s(start);
    o.require(seconds < 5.0, "layouts took " + std::to_string(seconds) + " s");
    if (o.ok) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "worst intra/inter %.3f", worst_ratio);
        o.detail = buf;
    }
}

void kinematics(Outcome& o) {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> coord(-1000, 1000), speed(0.01, 500), dt(0, 0.25);
    for (int i = 0; i < 1000; ++i) {
        Vec2 p{coord(rng), coord(rng)}, t{coord(rng), coord(rng)};
        double s = speed(rng), h = dt(rng);
        Vec2 q = animate(p, t, s, h);
        double want = std::min(s * h, distance(p, t));
        o.require(std::abs(distance(p, q) - want) <= 1e-9, "case " + std::to_string(i) + ": step length off");
        if (s * h >= distance(p, t)) o.require(q == t, "case " + std::to_string(i) + ": no snap");
        o.require(animate(t, t, s, h) == t, "target is not a fixed point");
    }
    if (o.ok) o.detail = "1000 cases";
}

void scenario_placement(Outcome& o) {
    const std::vector<std::string> nodes = {"careful",   "duty",         "careful",   "careful",
                                            "kill the enemy", "self-protect", "the enemy", "kill the enemy"};
    ScriptEvaluator ev(testing::scenario_map(), testing::scenario_script(), std::make_shared<HashedBagEmbedder>());
    std::vector<TrajectoryRecord> rows;
    while (auto r = ev.advance()) rows.push_back(*r);
    o.require(rows.size() == 8, "expected 8 rows");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        o.require(rows[i].node == nodes[i], "step " + std::to_string(i + 1) + " landed on " + rows[i].node);
        if (rows[i].role.is_commander()) o.require(!rows[i].text_similarity, "commander row has text similarity");
        else o.require(rows[i].text_similarity.has_value(), "missing text similarity");
    }
    o.require(rows.size() >= 4 && rows[2].node_dist == 0.0 && rows[3].node_dist == 0.0, "rows 3-4 not at distance 0");
    if (o.ok) o.detail = "8/8 steps";
}

void pearson_check(Outcome& o) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0, 1);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        std::size_t n = 2 + static_cast<std::size_t>(i % 60);
        double scale = std::pow(10.0, std::uniform_real_distribution<double>(-3, 3)(rng));
        double shift = std::uniform_real_distribution<double>(-100, 100)(rng);
        std::vector<double> x(n), y(n);
        for (std::size_t k = 0; k < n; ++k) {
            x[k] = shift + scale * z(rng);
            y[k] = -0.3 * x[k] + scale * z(rng);
        }
        double err = std::abs(*pearson(x, y) - two_pass_pearson(x, y));
        worst = std::max(worst, err);
        o.require(err <= 1e-12, "series " + std::to_string(i) + " off by " + std::to_string(err));
    }
    for (int i = 0; i < 100; ++i) {
        std::size_t n = 2 + static_cast<std::size_t>(i % 30);
        double slope = std::uniform_real_distribution<double>(0.1, 10)(rng) * (i % 2 ? -1 : 1);
        double icept = std::uniform_real_distribution<double>(-50, 50)(rng);
        std::vector<double> x(n), y(n);
        for (std::size_t k = 0; k < n; ++k) {
            x[k] = static_cast<double>(k) + 0.5 * static_cast<double>(k * k % 7);
            y[k] = slope * x[k] + icept;
        }
        auto r = pearson(x, y);
        o.require(r && std::abs(*r - (slope > 0 ? 1.0 : -1.0)) <= 1e-12, "linear series not +/-1");
    }
    if (o.ok) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "max error %.2e", worst);
        o.detail = buf;
    }
}

void csv_golden(Outcome& o) {
    std::string got = export_trajectory_csv(testing::trajectory_records());
    std::string want = read_text_file(testing::fixture("trajectory_golden.csv"));
    o.require(got == want, "CSV differs from golden file");
    if (o.ok) o.detail = std::to_string(want.size()) + " bytes";
}

void similarity_properties(Outcome& o) {
    HashedBagEmbedder e;
    std::mt19937_64 rng(99);
    for (int i = 0; i < 1000; ++i) {
        std::string a = sentence(rng), b = sentence(rng);
        double ab = similarity(a, b, e).value(), ba = similarity(b, a, e).value();
        o.require(similarity(a, a, e).value() >= 1.0 - 1e-9, "identity below 1");
        o.require(ab == ba, "asymmetric score");
        o.require(ab >= 0.0 && ab <= 1.0, "score out of range");
    }
    for (int round = 0; round < 100; ++round) {
        std::vector<Candidate> cands;
        int n = std::uniform_int_distribution<int>(1, 25)(rng);
        for (int i = 0; i < n; ++i) cands.push_back({static_cast<std::int64_t>(rng() % 1000), sentence(rng)});
        std::string q = sentence(rng);
        std::size_t k = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
        std::vector<Ranked> brute;
        for (const Candidate& c : cands) {
            std::vector<double> x = e.embed(q), y = e.embed(c.text);
            double dot = 0, nx = 0, ny = 0;
            for (std::size_t d = 0; d < x.size(); ++d) {
                dot += x[d] * y[d];
                nx += x[d] * x[d];
                ny += y[d] * y[d];
            }
            double s = q == c.text ? 1.0 : (nx == 0 || ny == 0 ? 0.0 : dot / (std::sqrt(nx) * std::sqrt(ny)));
            brute.push_back({c.id, SimilarityScore(s)});
        }
        std::stable_sort(brute.begin(), brute.end(), [](const Ranked& a, const Ranked& b) {
            return a.score.value() > b.score.value() || (a.score.value() == b.score.value() && a.id < b.id);
        });
        brute.resize(std::min(k, brute.size()));
        auto got = find_closest(q, cands, e, k);
        bool same = got.size() == brute.size();
        for (std::size_t i = 0; same && i < got.size(); ++i)
            same = got[i].id == brute[i].id && std::abs(got[i].score.value() - brute[i].score.value()) <= 1e-12;
        o.require(same, "ranking differs in round " + std::to_string(round));
    }
    if (o.ok) o.detail = "1000 pairs, 100 rankings";
}

void service_equivalence(Outcome& o) {
    constexpr Timestamp kNow = 1700000000000;
    const std::vector<std::string> targets = {"kill the enemy", "kill the enemy", "self-protect", "duty"};
    LayoutParams params;
    params.seed = 11;
    params.iterations = 200;

    testing::TempDir dir("nnm-acceptance");
    auto backend = std::make_shared<FixtureBackend>(FixtureBackend::from_file(testing::fixture("roe_prompt.tsv")));
    auto embedder = std::make_shared<HashedBagEmbedder>();
    double frame_time = 0;
    auto options = [&] {
        ServiceOptions opt;
        opt.data_dir = dir.path();
        opt.backend = backend;
        opt.embedder = embedder;
        opt.clock = [] { return kNow; };
        opt.frame_clock = [&] { return frame_time; };
        opt.id_generator = [] { return std::string("acceptance"); };
        return opt;
    };

    // Over HTTP.
    MapService service(options());
    MapServer server(service);
    int port = server.start("127.0.0.1", 0);
    httplib::Client http("127.0.0.1", port);
    auto post = [&](const std::string& path, const json& body) {
        auto res = http.Post(path, body.dump(), "application/json");
        if (!res || res->status != 200) throw Error("POST " + path + " failed");
        return json::parse(res->body);
    };
    auto created = http.Post("/sessions");
    if (!created || created->status != 201) throw Error("session create failed");
    std::string base = "/sessions/" + json::parse(created->body).at("session_id").get<std::string>();
    json pending = post(base + "/prompt", {{"template", testing::kRoeTemplate},
                                           {"seed", testing::kRoeSeed},
                                           {"seed_group", "masculine"}})
                       .at("pending");
    o.require(pending.size() == targets.size(), "expected 4 pending fragments");
    for (std::size_t i = 0; i < pending.size() && i < targets.size(); ++i)
        post(base + "/fragments/" + std::to_string(pending[i].at("id").get<int>()) + "/assign", {{"node", targets[i]}});
    post(base + "/layout", {{"seed", params.seed}, {"iterations", params.iterations}});
    auto put = http.Put(base + "/script", read_text_file(testing::fixture("scenario_script.json")), "application/json");
    if (!put || put->status != 200) throw Error("script upload failed");
    for (int i = 0; i < 8; ++i) post(base + "/script/step", {{"direction", "advance"}});
    for (int f = 0; f < 3; ++f) {
        http.Get(base + "/frame");
        frame_time += 0.05;
    }
    auto fetched = http.Get(base);
    if (!fetched || fetched->status != 200) throw Error("session fetch failed");
    std::string csv = http.Get(base + "/trajectory.csv")->body;
    server.stop();

    // Direct core calls.
    SessionDocument direct;
    direct.session_id = "acceptance";
    std::string prompt = PromptTemplate(testing::kRoeTemplate).render(testing::kRoeSeed);
    NodeId seed = direct.graph.add_node("masculine", std::string("masculine"));
    direct.graph.add_topic(seed, TopicText{testing::kRoeSeed, TopicSource::manual, std::nullopt, kNow});
    direct.graph.bump_query_count(seed);
    std::vector<std::string> fragments = parse_fragments(backend->generate(prompt));
    for (std::size_t i = 0; i < fragments.size() && i < targets.size(); ++i) {
        NodeId t = direct.graph.add_node(targets[i]);
        direct.graph.add_topic(t, TopicText{fragments[i], TopicSource::generated, prompt, kNow});
        direct.graph.connect(seed, t);
    }
    direct.next_fragment_id = static_cast<std::int64_t>(fragments.size()) + 1;
    run_layout(direct.graph, params);
    direct.script = testing::scenario_script();
    ScriptEvaluator ev(direct.graph, *direct.script, embedder);
    while (ev.advance()) {
    }
    ev.tick(0.05);
    ev.tick(0.05);
    direct.evaluation = ev.state();
    direct.updated_at = kNow;

    SessionDocument over_http = session_from_json(fetched->body);
    o.require(over_http == direct, "HTTP session document differs from direct composition");
    o.require(fetched->body == session_to_json(direct), "serialized documents differ");
    o.require(csv == export_trajectory_csv(ev.state().records), "trajectory CSV differs");

    MapService reopened(options());
    o.require(reopened.get("acceptance") == direct, "persisted document differs after reload");
    o.require(read_text_file(dir / "acceptance.json") == session_to_json(direct), "file bytes differ");
    if (o.ok) o.detail = "document, CSV and persisted copy identical";
}

} // namespace

int main() {
    auto suite = Stopwatch::now();
    criterion("builder-fidelity", builder_fidelity);
    criterion("no-requery", no_requery);
    criterion("gml-round-trip", gml_round_trip);
    criterion("layout-separation", layout_separation);
    criterion("agent-kinematics", kinematics);
    criterion("scenario-placement", scenario_placement);
    criterion("pearson", pearson_check);
    criterion("csv-golden", csv_golden);
    criterion("similarity-properties", similarity_properties);
    criterion("service-equivalence", [&](Outcome& o) {
        service_equivalence(o);
        double total = elapsed_s(suite);
        o.require(total < 60.0, "suite took " + std::to_string(total) + " s");
    });
    std::printf("%d failed, suite %.2f s\n", failures, elapsed_s(suite));
    return failures == 0 ? 0 : 1;
}
