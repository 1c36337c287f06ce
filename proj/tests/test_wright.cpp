#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace semid;
using support::load_graph;

namespace {

AugmentedGraph fig1a_beta_augmented(const MixedGraph& g) {
    return augment(g, std::vector<std::size_t>{support::edge(g, "w", "z")});
}

}  // namespace

TEST_CASE("single edge expression") {
    MixedGraph g = MixedGraph::parse("x -> y [a]\n");
    CovExpr e = wright_expression(g, g.node("x"), g.node("y"));
    CHECK(to_string(e) == "a");
    CHECK(evaluate(e, {{"a", 0.5}}) == Catch::Approx(0.5));
}

TEST_CASE("fig1a golden expressions for the beta-augmented graph") {
    MixedGraph g = load_graph("fig1a.g");
    AugmentedGraph ag = fig1a_beta_augmented(g);
    const MixedGraph& fg = ag.graph();
    std::size_t zs = fg.node("z*");

    CovExpr zx = cancel(wright_expression(ag, zs, fg.node("x")));
    CHECK(to_string(zx) == "d - b^2*d - b*C_wz*d");
    CHECK(zx.size() == 3);

    CovExpr zy_raw = wright_expression(ag, zs, fg.node("y"));
    CHECK(zy_raw.size() == 7);  // the +-b(C_wy + g C_sy) pairs are still present
    CovExpr zy = cancel(zy_raw);
    CHECK(to_string(zy) == "a*d - a*b^2*d - a*b*C_wz*d");
    CHECK(zy == cancel(zx.times_symbol("a")));

    CovExpr z_s = cancel(wright_expression(ag, zs, fg.node("s")));
    CHECK(z_s.empty());
    CHECK(to_string(z_s) == "0");
    CHECK(evaluate(z_s, {}) == 0.0);

    // the augmented enumeration substrate: three unblocked z*-x routes
    CHECK(enumerate_unblocked_paths(fg, zs, fg.node("x")).size() == 3);
}

TEST_CASE("cancel combines equal monomials and is idempotent") {
    CovExpr e(std::vector<Monomial>{{1, {"b", "x"}}, {-1, {"x", "b"}}});
    CHECK(cancel(e).empty());
    CovExpr f(std::vector<Monomial>{{2, {"a"}}, {1, {"a", "a"}}});
    CHECK(cancel(f) == f);
    CHECK(cancel(cancel(f)) == cancel(f));
}

TEST_CASE("evaluate reports missing symbols") {
    MixedGraph g = MixedGraph::parse("x -> y [a]\n");
    CovExpr e = wright_expression(g, g.node("x"), g.node("y"));
    CHECK_THROWS_AS(evaluate(e, {}), ValidationError);
}

TEST_CASE("enumeration cap propagates") {
    MixedGraph g = load_graph("fig1a.g");
    CHECK_THROWS_AS(wright_expression(g, g.node("s"), g.node("y"), 1), EnumerationCapError);
}

TEST_CASE("auxiliary nodes do not alter expressions between base nodes", "[property]") {
    std::mt19937_64 pick(11);
    for (std::uint64_t seed = 700; seed < 725; ++seed) {
        support::GraphGen gen(seed);
        MixedGraph g = gen(3, 6);
        if (g.directed().empty()) continue;
        std::vector<std::size_t> sub;
        for (std::size_t e = 0; e < g.directed().size(); ++e)
            if (pick() & 1) sub.push_back(e);
        if (sub.empty()) sub.push_back(pick() % g.directed().size());
        AugmentedGraph ag = augment(g, sub);
        for (std::size_t x = 0; x < g.node_count(); ++x)
            for (std::size_t y = x + 1; y < g.node_count(); ++y)
                CHECK(wright_expression(ag, x, y) == wright_expression(g, x, y));
    }
}

TEST_CASE("aux expressions expand as the subtraction of base expressions", "[property]") {
    std::mt19937_64 pick(23);
    for (std::uint64_t seed = 750; seed < 775; ++seed) {
        support::GraphGen gen(seed);
        MixedGraph g = gen(3, 6);
        if (g.directed().empty()) continue;
        std::size_t e0 = pick() % g.directed().size();
        std::size_t z = g.directed()[e0].head;
        std::vector<std::size_t> sub;
        for (std::size_t e : g.incident_edges(z))
            if (e == e0 || (pick() & 1)) sub.push_back(e);
        AugmentedGraph ag = augment(g, sub);
        std::size_t zs = *ag.aux_for(z);
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            if (v == z) continue;
            CovExpr direct = cancel(wright_expression(ag, zs, v));
            CovExpr manual = wright_expression(g, z, v);
            for (std::size_t e : sub)
                manual = manual -
                         wright_expression(g, g.directed()[e].tail, v)
                             .times_symbol(g.directed()[e].label);
            INFO("seed " << seed << " z=" << g.name(z) << " v=" << g.name(v));
            CHECK(direct == cancel(manual));
        }
    }
}

TEST_CASE("expressions evaluate to matrix covariances on standardized models",
          "[property]") {
    for (std::uint64_t seed = 800; seed < 810; ++seed) {
        support::GraphGen gen(seed);
        MixedGraph g = gen(3, 6);
        ModelInstance m = standardize(random_instance(g, seed * 13 + 1));
        Eigen::MatrixXd sigma = implied_covariance(m);
        SymbolAssignment a;
        for (const auto& e : g.directed())
            a[e.label] = m.lambda(Eigen::Index(e.tail), Eigen::Index(e.head));
        for (const auto& e : g.bidirected())
            a[e.label] = m.omega(Eigen::Index(e.a), Eigen::Index(e.b));
        for (std::size_t x = 0; x < g.node_count(); ++x)
            for (std::size_t y = x + 1; y < g.node_count(); ++y) {
                double w = evaluate(wright_expression(g, x, y), a);
                CHECK(std::abs(w - sigma(Eigen::Index(x), Eigen::Index(y))) < 1e-8);
            }
    }
}
