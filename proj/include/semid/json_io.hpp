#pragma once

#include <json.hpp>

#include "constraints.hpp"
#include "wright.hpp"

namespace semid {

using ojson = nlohmann::ordered_json;

inline ojson to_json(const MixedGraph& g, const Path& p) {
    ojson names = ojson::array();
    for (std::size_t v : p.nodes) names.push_back(g.name(v));
    return names;
}

inline ojson to_json(const MixedGraph& g, const PathSystem& sys) {
    ojson out = ojson::array();
    for (const auto& p : sys.paths) out.push_back(to_json(g, p));
    return out;
}

inline ojson to_json(const CovExpr& expr) {
    ojson out = ojson::array();
    for (const auto& m : expr.monomials()) out.push_back({{"coeff", m.coeff},
                                                          {"symbols", m.symbols}});
    return out;
}

inline ojson to_json(const MixedGraph& g, const Certificate& cert) {
    ojson edges = ojson::array();
    for (std::size_t e : cert.target.edges) edges.push_back(g.edge_name(e));
    ojson instruments = ojson::array();
    for (std::size_t z : cert.instruments) instruments.push_back(g.name(z));
    ojson subtracted = ojson::object();
    for (std::size_t i = 0; i < cert.instruments.size(); ++i) {
        ojson labels = ojson::array();
        for (std::size_t e : cert.subtracted[i]) labels.push_back(g.edge_name(e));
        subtracted[g.name(cert.instruments[i])] = labels;
    }
    ojson head_sub = ojson::array();
    for (std::size_t e : cert.head_subtracted) head_sub.push_back(g.edge_name(e));
    return {{"method", method_name(cert.method)},
            {"head", g.name(cert.target.head)},
            {"edges", edges},
            {"instruments", instruments},
            {"subtracted", subtracted},
            {"head_subtracted", head_sub},
            {"path_system", to_json(g, cert.witness)}};
}

inline ojson to_json(const MixedGraph& g, const IdentificationResult& result) {
    ojson identified = ojson::array();
    for (const auto& d : result.identified) {
        ojson entry = to_json(g, d.certificate);
        entry["round"] = d.round;
        identified.push_back(std::move(entry));
    }
    ojson unidentified = ojson::array();
    for (std::size_t e : result.unidentified) unidentified.push_back(g.edge_name(e));
    ojson external = ojson::array();
    for (std::size_t e : result.external) external.push_back(g.edge_name(e));
    return {{"identified", identified},
            {"unidentified", unidentified},
            {"external", external},
            {"rounds", result.rounds},
            {"budget_notes", result.budget_notes}};
}

inline ojson to_json(const MixedGraph& g, const Constraint& c) {
    ojson out{{"kind", kind_name(c.kind)}, {"formula", c.formula}};
    if (c.kind == Constraint::Kind::overidentification) {
        out["edge"] = g.edge_name(c.edge);
        out["certificates"] = {to_json(g, c.recipes->first), to_json(g, c.recipes->second)};
        return out;
    }
    out["nodes"] = {g.name(c.node_a), g.name(c.node_b)};
    ojson sub = ojson::array();
    for (std::size_t e : c.subtracted) sub.push_back(g.edge_name(e));
    out["subtracted"] = sub;
    ojson terms = ojson::array();
    for (const auto& t : c.terms) {
        ojson symbols = ojson::array();
        for (std::size_t e : t.weight_edges) symbols.push_back(g.directed()[e].label);
        terms.push_back({{"coeff", t.coeff},
                         {"symbols", symbols},
                         {"entry", {g.name(t.row), g.name(t.col)}}});
    }
    out["terms"] = terms;
    return out;
}

inline ojson to_json(const ModelInstance& m) {
    ojson lambda = ojson::object();
    for (const auto& e : m.graph.directed())
        lambda[m.graph.edge_name(e)] = m.lambda(Eigen::Index(e.tail), Eigen::Index(e.head));
    ojson omega = ojson::object();
    for (std::size_t v = 0; v < m.graph.node_count(); ++v)
        omega[m.graph.name(v)] = m.omega(Eigen::Index(v), Eigen::Index(v));
    for (const auto& e : m.graph.bidirected())
        omega[m.graph.name(e.a) + "<->" + m.graph.name(e.b)] =
            m.omega(Eigen::Index(e.a), Eigen::Index(e.b));
    return {{"lambda", lambda}, {"omega", omega}};
}

}  // namespace semid
