#pragma once

#include "oracle.hpp"

namespace semid {

/// coeff * product(values of weight_edges) * sigma(row, col)
struct ConstraintTerm {
    long long coeff = 1;
    std::vector<std::size_t> weight_edges;
    std::size_t row = 0;
    std::size_t col = 0;
};

/**
 * A testable implication. Vanishing kinds assert a weighted combination of
 * covariance entries is zero; overidentification asserts two certificate
 * recipes for one edge agree numerically.
 */
struct Constraint {
    enum class Kind { vanishing_plain, vanishing_aux, overidentification };
    Kind kind = Kind::vanishing_plain;
    std::vector<ConstraintTerm> terms;
    std::size_t node_a = 0;                // provenance pair (z, s) / (x, y)
    std::size_t node_b = 0;
    std::vector<std::size_t> subtracted;   // E_z for vanishing_aux
    std::size_t edge = 0;                  // overidentified edge
    std::optional<std::pair<Certificate, Certificate>> recipes;
    std::string formula;
};

inline const char* kind_name(Constraint::Kind k) {
    switch (k) {
        case Constraint::Kind::vanishing_plain: return "vanishing_plain";
        case Constraint::Kind::vanishing_aux: return "vanishing_aux";
        case Constraint::Kind::overidentification: return "overidentification";
    }
    return "?";
}

namespace detail {

inline std::string cov_entry(const MixedGraph& g, std::size_t a, std::size_t b) {
    return "cov(" + g.name(a) + "," + g.name(b) + ")";
}

}  // namespace detail

/**
 * Derives, in deterministic order: plain vanishing covariances (d-separated
 * pairs), auxiliary vanishing covariances (Lemma-2 pairs made separable by
 * subtracting known edges), and overidentification equalities for edges
 * with at least two singleton-instrument certificates.
 */
inline std::vector<Constraint> derive_constraints(const MixedGraph& g, const KnownEdges& known,
                                                  const SearchBudget& budget = {}) {
    std::vector<Constraint> out;
    std::size_t n = g.node_count();

    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = x + 1; y < n; ++y) {
            if (!d_separated(g, x, y, {})) continue;
            Constraint c;
            c.kind = Constraint::Kind::vanishing_plain;
            c.node_a = x;
            c.node_b = y;
            c.terms.push_back({1, {}, x, y});
            c.formula = detail::cov_entry(g, x, y) + " = 0";
            out.push_back(std::move(c));
        }

    for (std::size_t z = 0; z < n; ++z) {
        std::vector<std::size_t> ez = known_incident(g, known, z);
        if (ez.empty()) continue;
        EdgeMask mask = make_edge_mask(g, ez);
        for (std::size_t s = 0; s < n; ++s) {
            if (s == z) continue;
            if (!d_separated(g, z, s, {}, &mask)) continue;
            if (d_separated(g, z, s, {})) continue;  // already a plain constraint
            Constraint c;
            c.kind = Constraint::Kind::vanishing_aux;
            c.node_a = z;
            c.node_b = s;
            c.subtracted = ez;
            c.terms.push_back({1, {}, z, s});
            std::string f = detail::cov_entry(g, z, s);
            for (std::size_t e : ez) {
                c.terms.push_back({-1, {e}, g.directed()[e].tail, s});
                f += " - " + g.directed()[e].label + "*" +
                     detail::cov_entry(g, g.directed()[e].tail, s);
            }
            c.formula = f + " = 0";
            out.push_back(std::move(c));
        }
    }

    PathCache cache;
    for (std::size_t e = 0; e < g.directed().size(); ++e) {
        std::size_t y = g.directed()[e].head;
        if (g.node_count() - 1 > budget.max_pool) break;
        EdgeSet E = EdgeSet::of(g, {e});
        std::vector<Certificate> certs;
        for (std::size_t z = 0; z < n && certs.size() < 2; ++z) {
            if (z == y) continue;
            std::size_t zz[1] = {z};
            if (auto cert = check_aux_is(g, zz, E, known, &cache)) certs.push_back(*cert);
        }
        if (certs.size() < 2) continue;
        Constraint c;
        c.kind = Constraint::Kind::overidentification;
        c.edge = e;
        c.node_a = g.directed()[e].tail;
        c.node_b = y;
        c.formula = "estimate(" + g.edge_name(e) + " via " + g.name(certs[0].instruments[0]) +
                    ") - estimate(" + g.edge_name(e) + " via " + g.name(certs[1].instruments[0]) +
                    ") = 0";
        c.recipes = {std::move(certs[0]), std::move(certs[1])};
        out.push_back(std::move(c));
    }
    return out;
}

/// |residual| per constraint; model-consistent population matrices give
/// residuals at numerical-noise level.
inline std::vector<double> evaluate_constraints(const MixedGraph& g,
                                                const Eigen::MatrixXd& sigma,
                                                std::span<const Constraint> constraints,
                                                const std::map<std::size_t, double>& values) {
    std::vector<double> residuals;
    residuals.reserve(constraints.size());
    for (const auto& c : constraints) {
        if (c.kind == Constraint::Kind::overidentification) {
            SolveOutcome a = solve_certificate(g, sigma, c.recipes->first, values);
            SolveOutcome b = solve_certificate(g, sigma, c.recipes->second, values);
            residuals.push_back(std::abs(a.values.at(c.edge) - b.values.at(c.edge)));
            continue;
        }
        double total = 0.0;
        for (const auto& t : c.terms) {
            double w = double(t.coeff);
            for (std::size_t e : t.weight_edges) {
                auto it = values.find(e);
                if (it == values.end())
                    throw ValidationError("missing numeric value for edge " + g.edge_name(e));
                w *= it->second;
            }
            total += w * sigma(Eigen::Index(t.row), Eigen::Index(t.col));
        }
        residuals.push_back(std::abs(total));
    }
    return residuals;
}

}  // namespace semid
