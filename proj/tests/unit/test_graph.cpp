#include <doctest.h>

#include "nnm/errors.hpp"
#include "nnm/graph.hpp"

using namespace nnm;

TEST_CASE("names are trimmed for display and folded for identity") {
    CHECK(display_name("  San   Marino \n") == "San Marino");
    CHECK(name_key("  San   Marino ") == "san marino");
    CHECK(name_key("FRANCE") == name_key("france"));
    CHECK(display_name(" \t ").empty());
}

TEST_CASE("add_node is idempotent under name normalization") {
    MapGraph g;
    NodeId france = g.add_node("France");
    CHECK(g.add_node(" france ") == france);
    CHECK(g.add_node("FRANCE", "europe") == france);
    CHECK(g.node(france).name == "France");
    CHECK(g.node(france).group == std::optional<std::string>("europe"));
    CHECK(g.add_node("France", "elsewhere") == france);
    CHECK(g.node(france).group == std::optional<std::string>("europe"));
    CHECK(g.node_count() == 1);
    CHECK_THROWS_AS(g.add_node("   "), InvalidArgument);
}

TEST_CASE("edges are undirected, unique and never self-loops") {
    MapGraph g;
    NodeId a = g.add_node("a"), b = g.add_node("b"), c = g.add_node("c");
    g.connect(b, a);
    g.connect(a, b);
    CHECK(g.edge_count() == 1);
    CHECK(g.has_edge(a, b));
    CHECK(g.has_edge(b, a));
    CHECK_FALSE(g.has_edge(a, c));
    CHECK(g.edges().begin()->source == a);

    CHECK_THROWS_AS(g.connect(a, a), InvalidArgument);
    CHECK_THROWS_AS(g.connect(a, NodeId{99}), NotFound);
    CHECK(g.edge_count() == 1);
}

TEST_CASE("degrees and neighbours follow the edge set") {
    MapGraph g;
    NodeId hub = g.add_node("hub");
    std::vector<NodeId> spokes;
    for (int i = 0; i < 4; ++i) {
        spokes.push_back(g.add_node("spoke " + std::to_string(i)));
        g.connect(hub, spokes.back());
    }
    CHECK(g.degree(hub) == 4);
    CHECK(g.degree(spokes[0]) == 1);
    CHECK(g.degrees() == std::vector<std::size_t>{4, 1, 1, 1, 1});
    CHECK(g.neighbours(hub) == spokes);
}

TEST_CASE("insert_node keeps id order and rejects collisions") {
    MapGraph g;
    MapNode n;
    n.id = NodeId{7};
    n.name = "seven";
    g.insert_node(n);
    n.id = NodeId{3};
    n.name = "three";
    g.insert_node(n);
    CHECK(g.nodes()[0].id == NodeId{3});
    CHECK(g.add_node("fresh") == NodeId{8});

    n.id = NodeId{3};
    n.name = "other";
    CHECK_THROWS_AS(g.insert_node(n), InvalidArgument);
    n.id = NodeId{20};
    n.name = "SEVEN";
    CHECK_THROWS_AS(g.insert_node(n), InvalidArgument);
}

TEST_CASE("positions must be finite and match the node count") {
    MapGraph g;
    g.add_node("a");
    g.add_node("b");
    std::vector<Vec2> good = {{1, 2}, {3, 4}};
    g.set_positions(good);
    CHECK(g.positions() == good);

    std::vector<Vec2> bad = {{1, 2}, {std::numeric_limits<double>::infinity(), 0}};
    CHECK_THROWS_AS(g.set_positions(bad), InvalidArgument);
    std::vector<Vec2> short_list = {{1, 2}};
    CHECK_THROWS_AS(g.set_positions(short_list), InvalidArgument);
    CHECK(g.positions() == good);
}

TEST_CASE("topics and query counts accumulate per node") {
    MapGraph g;
    NodeId a = g.add_node("a");
    g.add_topic(a, TopicText{"first", TopicSource::manual, std::nullopt, 5});
    g.add_topic(a, TopicText{"second", TopicSource::generated, "prompt", 6});
    g.bump_query_count(a);
    g.bump_query_count(a, 2);
    CHECK(g.node(a).topics.size() == 2);
    CHECK(g.topic_count() == 2);
    CHECK(g.node(a).query_count == 3);
    CHECK_THROWS_AS(g.add_topic(NodeId{42}, TopicText{"x", TopicSource::generated, std::nullopt, 0}), NotFound);
}

TEST_CASE("equality covers nodes, edges and layout seed") {
    MapGraph a, b;
    for (MapGraph* g : {&a, &b}) {
        NodeId x = g->add_node("x"), y = g->add_node("y");
        g->connect(x, y);
    }
    CHECK(a == b);
    b.set_layout_seed(42);
    CHECK_FALSE(a == b);
    a.set_layout_seed(42);
    a.set_position(NodeId{1}, {0.5, 0});
    CHECK_FALSE(a == b);
}

TEST_CASE("topic source names round trip") {
    for (TopicSource s : {TopicSource::generated, TopicSource::manual})
        CHECK(topic_source_from_string(to_string(s)) == s);
    CHECK_THROWS(topic_source_from_string("scribbled"));
}
