#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace semid;
using support::load_graph;

namespace {

// independent route: extend the model with y* as a literal variable and
// recompute the covariance with a dense inverse
Eigen::MatrixXd extended_sigma(const ModelInstance& m, const AugmentedGraph& ag) {
    std::size_t n = m.graph.node_count();
    std::size_t total = n + ag.aux_nodes().size();
    Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(total, total);
    lambda.topLeftCorner(n, n) = m.lambda;
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(total, total);
    omega.topLeftCorner(n, n) = m.omega;
    for (std::size_t i = 0; i < ag.aux_nodes().size(); ++i) {
        const auto& aux = ag.aux_nodes()[i];
        std::size_t col = n + i;
        lambda(Eigen::Index(aux.base_head), Eigen::Index(col)) = 1.0;
        for (const auto& [full_e, base_e] : aux.minus_edges) {
            const auto& be = m.graph.directed()[base_e];
            lambda(Eigen::Index(be.tail), Eigen::Index(col)) -=
                m.lambda(Eigen::Index(be.tail), Eigen::Index(be.head));
        }
    }
    Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(total, total) - lambda.transpose();
    Eigen::MatrixXd Ainv = A.inverse();
    return Ainv * omega * Ainv.transpose();
}

KnownEdges known_with_values(const MixedGraph& g, const ModelInstance& m,
                             std::span<const std::size_t> edges) {
    KnownEdges out;
    for (std::size_t e : edges) {
        const auto& de = g.directed()[e];
        out[e] = {KnownCoefficient::Source::external,
                  m.lambda(Eigen::Index(de.tail), Eigen::Index(de.head)), -1};
    }
    return out;
}

}  // namespace

TEST_CASE("augment with the empty set is the identity") {
    MixedGraph g = load_graph("fig1a.g");
    AugmentedGraph ag = augment(g, {});
    CHECK(ag.aux_nodes().empty());
    CHECK(ag.graph().serialize() == g.serialize());
}

TEST_CASE("fig1a beta augmentation adds z* with the +1/-b edges") {
    MixedGraph g = load_graph("fig1a.g");
    AugmentedGraph ag = augment(g, std::vector<std::size_t>{support::edge(g, "w", "z")});
    REQUIRE(ag.aux_nodes().size() == 1);
    const MixedGraph& fg = ag.graph();
    std::size_t zs = fg.node("z*");
    CHECK(ag.is_aux_node(zs));
    CHECK(fg.children(zs).empty());
    CHECK(fg.bidirected_at(zs).empty());
    CHECK(fg.parents(zs) == support::nodes(fg, {"w", "z"}));

    WrightWeight unit = ag.wright_weight(*fg.find_directed(fg.node("z"), zs));
    CHECK(unit.sign == 1);
    CHECK_FALSE(unit.symbol.has_value());
    WrightWeight minus = ag.wright_weight(*fg.find_directed(fg.node("w"), zs));
    CHECK(minus.sign == -1);
    CHECK(minus.symbol == std::optional<std::string>("b"));
}

TEST_CASE("fig4a gamma augmentation subtracts at the head") {
    MixedGraph g = load_graph("fig4a.g");
    AugmentedGraph ag = augment(g, std::vector<std::size_t>{support::edge(g, "z", "y")});
    const MixedGraph& fg = ag.graph();
    std::size_t ys = fg.node("y*");
    CHECK(fg.parents(ys) == support::nodes(fg, {"z", "y"}));
    WrightWeight minus = ag.wright_weight(*fg.find_directed(fg.node("z"), ys));
    CHECK(minus.sign == -1);
    CHECK(minus.symbol == std::optional<std::string>("g"));
}

TEST_CASE("augment rejects foreign edges") {
    MixedGraph g = load_graph("bow.g");
    CHECK_THROWS_AS(augment(g, std::vector<std::size_t>{5}), ValidationError);
}

TEST_CASE("aux_covariance spec cases") {
    MixedGraph g = load_graph("fig1a.g");
    ModelInstance m = random_instance(g, 7);
    Eigen::MatrixXd sigma = implied_covariance(m);
    std::size_t be = support::edge(g, "w", "z");
    KnownEdges known = known_with_values(g, m, std::vector<std::size_t>{be});
    double beta = known[be].value;

    CHECK(aux_covariance(g, sigma, known, "w", "x") ==
          Catch::Approx(sigma(g.node("w"), g.node("x"))));
    double zs_v = aux_covariance(g, sigma, known, "z*", "x");
    CHECK(zs_v == Catch::Approx(sigma(g.node("z"), g.node("x")) -
                                beta * sigma(g.node("w"), g.node("x"))));
    CHECK_THROWS_AS(aux_covariance(g, sigma, known, "z*", "z*"), ValidationError);
    CHECK_THROWS_AS(aux_covariance(g, sigma, known, "s*", "x"), ValidationError);
    CHECK_THROWS_AS(aux_covariance(g, sigma, KnownEdges{}, "z*", "x"), ValidationError);
}

TEST_CASE("aux covariances match the explicit model extension", "[property]") {
    std::mt19937_64 pick(31);
    for (std::uint64_t seed = 900; seed < 930; ++seed) {
        support::GraphGen gen(seed);
        MixedGraph g = gen(3, 6);
        if (g.directed().empty()) continue;
        std::vector<std::size_t> sub;
        for (std::size_t e = 0; e < g.directed().size(); ++e)
            if (pick() & 1) sub.push_back(e);
        if (sub.empty()) sub.push_back(pick() % g.directed().size());
        AugmentedGraph ag = augment(g, sub);
        ModelInstance m = random_instance(g, seed);
        Eigen::MatrixXd sigma = implied_covariance(m);
        Eigen::MatrixXd ext = extended_sigma(m, ag);
        std::size_t n = g.node_count();

        // base covariances are untouched by augmentation
        CHECK((ext.topLeftCorner(n, n) - sigma).cwiseAbs().maxCoeff() < 1e-10);

        KnownEdges known = known_with_values(g, m, sub);
        auto var_name = [&](std::size_t v) {
            return v < n ? g.name(v)
                         : g.name(ag.aux_nodes()[v - n].base_head) + "*";
        };
        std::size_t total = n + ag.aux_nodes().size();
        for (std::size_t a = 0; a < total; ++a)
            for (std::size_t b = a + 1; b < total; ++b) {
                // only heads with subtracted edges have auxiliaries
                double got = aux_covariance(g, sigma, known, var_name(a), var_name(b));
                CHECK(std::abs(got - ext(Eigen::Index(a), Eigen::Index(b))) < 1e-10);
            }
    }
}

TEST_CASE("Lemma 2: aux covariance vanishes iff the instrument separation holds",
          "[property]") {
    std::mt19937_64 pick(41);
    int checked = 0;
    for (std::uint64_t seed = 950; seed < 990; ++seed) {
        support::GraphGen gen(seed);
        MixedGraph g = gen(3, 7);
        ModelInstance m = standardize(random_instance(g, seed * 3 + 2));
        Eigen::MatrixXd sigma = implied_covariance(m);
        for (std::size_t z = 0; z < g.node_count(); ++z) {
            const auto& inc = g.incident_edges(z);
            if (inc.empty()) continue;
            std::vector<std::size_t> ez;
            for (std::size_t e : inc)
                if (pick() & 1) ez.push_back(e);
            if (ez.empty()) ez.push_back(inc[pick() % inc.size()]);
            KnownEdges known = known_with_values(g, m, ez);
            EdgeMask mask = make_edge_mask(g, ez);
            for (std::size_t y = 0; y < g.node_count(); ++y) {
                if (y == z) continue;
                double cov = aux_covariance(g, sigma, known, g.name(z) + "*", g.name(y));
                bool sep = d_separated(g, z, y, {}, &mask);
                INFO("seed " << seed << " z=" << g.name(z) << " y=" << g.name(y));
                if (sep)
                    CHECK(std::abs(cov) <= 1e-8);
                else
                    CHECK(std::abs(cov) > 1e-8);
                ++checked;
            }
        }
    }
    CHECK(checked > 200);
}

TEST_CASE("known-coefficient files parse and validate") {
    MixedGraph g = load_graph("fig1a.g");
    KnownEdges k = parse_known("# c\nw -> z = 0.7\n", g);
    REQUIRE(k.size() == 1);
    CHECK(k.begin()->first == support::edge(g, "w", "z"));
    CHECK(k.begin()->second.value == Catch::Approx(0.7));
    CHECK(k.begin()->second.source == KnownCoefficient::Source::external);

    CHECK_THROWS_AS(parse_known("q -> z = 1\n", g), ParseError);
    CHECK_THROWS_AS(parse_known("s -> y = 1\n", g), ParseError);  // no such edge
    CHECK_THROWS_AS(parse_known("w -> z = abc\n", g), ParseError);
    CHECK_THROWS_AS(parse_known("w -> z = 1\nw -> z = 2\n", g), ParseError);
    CHECK_THROWS_AS(parse_known("w -> z\n", g), ParseError);
}
