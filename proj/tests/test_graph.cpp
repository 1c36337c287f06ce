#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace semid;
using support::load_graph;

TEST_CASE("parse single directed edge") {
    MixedGraph g = MixedGraph::parse("x -> y [a]\n");
    REQUIRE(g.node_count() == 2);
    REQUIRE(g.directed().size() == 1);
    CHECK(g.directed()[0].label == "a");
    CHECK(g.name(g.directed()[0].tail) == "x");
    CHECK(g.name(g.directed()[0].head) == "y");
}

TEST_CASE("parse fig1a fixture") {
    MixedGraph g = load_graph("fig1a.g");
    REQUIRE(g.node_count() == 5);
    CHECK(g.directed().size() == 4);
    CHECK(g.bidirected().size() == 3);
    CHECK(g.names() == std::vector<std::string>{"s", "w", "z", "x", "y"});
    CHECK(g.find_directed("b").has_value());
    CHECK(g.find_bidirected(g.node("w"), g.node("z")).has_value());
}

TEST_CASE("parse rejects cycles") {
    CHECK_THROWS_AS(MixedGraph::parse("x -> y\ny -> x\n"), ParseError);
    CHECK_THROWS_WITH(MixedGraph::parse("x -> y\ny -> x\n"),
                      Catch::Matchers::ContainsSubstring("cyclic"));
}

TEST_CASE("parse errors carry positions and reasons") {
    CHECK_THROWS_AS(MixedGraph::parse("x => y\n"), ParseError);
    CHECK_THROWS_AS(MixedGraph::parse("x -> x\n"), ParseError);          // self-loop
    CHECK_THROWS_AS(MixedGraph::parse("x -> y\nx -> y\n"), ParseError);  // duplicate
    CHECK_THROWS_AS(MixedGraph::parse("x -> y [\n"), ParseError);        // open label
    CHECK_THROWS_AS(MixedGraph::parse("x <-> x\n"), ParseError);
    CHECK_THROWS_AS(MixedGraph::parse("node a$b\n"), ParseError);
    try {
        MixedGraph::parse("# ok\nx -> \n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("labels default to tail_head and a<>b") {
    MixedGraph g = MixedGraph::parse("x -> y\nx <-> y\n");
    CHECK(g.directed()[0].label == "x_y");
    CHECK(g.bidirected()[0].label == "x<>y");
}

TEST_CASE("comments and node declarations") {
    MixedGraph g = MixedGraph::parse("# header\nnode c\nnode a\nnode b # trailing\n");
    CHECK(g.names() == std::vector<std::string>{"c", "a", "b"});
    CHECK(g.topological_order() == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("topological order of a chain") {
    MixedGraph g = MixedGraph::parse("x -> y\ny -> z\n");
    std::vector<std::string> order;
    for (std::size_t v : g.topological_order()) order.push_back(g.name(v));
    CHECK(order == std::vector<std::string>{"x", "y", "z"});
}

TEST_CASE("topological order of fig1a follows the causal chain") {
    MixedGraph g = load_graph("fig1a.g");
    const auto& topo = g.topological_order();
    auto pos = [&](const char* n) {
        return std::find(topo.begin(), topo.end(), g.node(n)) - topo.begin();
    };
    CHECK(pos("s") < pos("w"));
    CHECK(pos("w") < pos("z"));
    CHECK(pos("z") < pos("x"));
    CHECK(pos("x") < pos("y"));
}

TEST_CASE("relations on chains and siblings") {
    MixedGraph chain = MixedGraph::parse("x -> y\ny -> z\n");
    NodeRelations r = chain.relations(chain.node("z"));
    CHECK(r.parents == std::vector<std::size_t>{chain.node("y")});
    CHECK(r.ancestors == std::vector<std::size_t>{chain.node("x"), chain.node("y"),
                                                  chain.node("z")});

    MixedGraph sib = MixedGraph::parse("x <-> y\n");
    NodeRelations ry = sib.relations(sib.node("y"));
    CHECK(ry.siblings == std::vector<std::size_t>{sib.node("x")});
    CHECK(ry.parents.empty());

    MixedGraph fig1a = load_graph("fig1a.g");
    NodeRelations rz = fig1a.relations(fig1a.node("z"));
    CHECK(rz.parents == std::vector<std::size_t>{fig1a.node("w")});
    CHECK(rz.siblings == std::vector<std::size_t>{fig1a.node("w")});
    CHECK(rz.incident_edges == std::vector<std::size_t>{support::edge(fig1a, "w", "z")});

    CHECK_THROWS_AS(fig1a.node("nope"), ValidationError);
}

TEST_CASE("round trip through canonical serialization", "[property]") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        support::GraphGen gen(seed);
        MixedGraph g = gen();
        MixedGraph back = MixedGraph::parse(g.serialize());
        CHECK(back.serialize() == g.serialize());
        REQUIRE(back.node_count() == g.node_count());
        REQUIRE(back.directed().size() == g.directed().size());
        REQUIRE(back.bidirected().size() == g.bidirected().size());
    }
}

TEST_CASE("topological order is consistent with every edge", "[property]") {
    for (std::uint64_t seed = 100; seed < 140; ++seed) {
        support::GraphGen gen(seed);
        MixedGraph g = gen();
        const auto& topo = g.topological_order();
        std::vector<std::size_t> pos(g.node_count());
        for (std::size_t i = 0; i < topo.size(); ++i) pos[topo[i]] = i;
        for (const auto& e : g.directed()) CHECK(pos[e.tail] < pos[e.head]);
    }
}

TEST_CASE("ancestors are the least fixed point of parents", "[property]") {
    for (std::uint64_t seed = 200; seed < 220; ++seed) {
        support::GraphGen gen(seed);
        MixedGraph g = gen();
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            auto anc = g.ancestors(v);
            CHECK(std::binary_search(anc.begin(), anc.end(), v));
            std::set<std::size_t> expected{v};
            for (bool grew = true; grew;) {
                grew = false;
                for (std::size_t u : std::set<std::size_t>(expected))
                    for (std::size_t p : g.parents(u)) grew = expected.insert(p).second || grew;
            }
            CHECK(std::set<std::size_t>(anc.begin(), anc.end()) == expected);
        }
    }
}
