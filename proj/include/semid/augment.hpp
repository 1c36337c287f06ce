#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "paths.hpp"

namespace semid {

/// Provenance of a known coefficient value.
struct KnownCoefficient {
    enum class Source { external, identified };
    Source source = Source::external;
    double value = std::numeric_limits<double>::quiet_NaN();
    int certificate = -1;  // derivation-order index for identified entries

    bool has_value() const { return !std::isnan(value); }
};

/// Known directed edges, keyed by index into MixedGraph::directed().
using KnownEdges = std::map<std::size_t, KnownCoefficient>;

inline std::vector<std::size_t> known_incident(const MixedGraph& g, const KnownEdges& known,
                                               std::size_t v) {
    std::vector<std::size_t> out;
    for (std::size_t e : g.incident_edges(v))
        if (known.count(e)) out.push_back(e);
    return out;
}

/// Wright contribution of one directed edge in an augmented graph: the
/// signed unit weight of auxiliary edges, or the edge's own symbol.
struct WrightWeight {
    int sign = 1;
    std::optional<std::string> symbol;
};

/**
 * E-augmented graph: one auxiliary node y* per head of E, with the unit
 * edge y -> y* and a -lambda edge x -> y* for each subtracted parent.
 * Aux nodes are sinks and never carry bidirected edges; base-node indices
 * and base-edge indices are shared with the original graph.
 */
class AugmentedGraph {
  public:
    struct AuxNode {
        std::size_t base_head;   // y, base node index
        std::size_t node;        // y*, node index in graph()
        std::size_t unit_edge;   // y -> y*, directed-edge index in graph()
        std::vector<std::pair<std::size_t, std::size_t>> minus_edges;  // (full edge, base edge)
    };

    const MixedGraph& graph() const { return full_; }
    std::size_t base_node_count() const { return base_nodes_; }
    std::size_t base_directed_count() const { return base_directed_; }
    bool is_aux_node(std::size_t v) const { return v >= base_nodes_; }
    const std::vector<AuxNode>& aux_nodes() const { return aux_; }
    const std::vector<std::size_t>& subtracted_edges() const { return subtracted_; }

    std::optional<std::size_t> aux_for(std::size_t base_head) const {
        for (const auto& a : aux_)
            if (a.base_head == base_head) return a.node;
        return std::nullopt;
    }

    WrightWeight wright_weight(std::size_t directed_edge) const {
        if (directed_edge < base_directed_)
            return {1, full_.directed()[directed_edge].label};
        for (const auto& a : aux_) {
            if (directed_edge == a.unit_edge) return {1, std::nullopt};
            for (const auto& [full_e, base_e] : a.minus_edges)
                if (directed_edge == full_e) return {-1, full_.directed()[base_e].label};
        }
        throw ValidationError("edge index out of range in augmented graph");
    }

  private:
    friend AugmentedGraph augment(const MixedGraph&, std::span<const std::size_t>);

    MixedGraph full_;
    std::size_t base_nodes_ = 0;
    std::size_t base_directed_ = 0;
    std::vector<AuxNode> aux_;
    std::vector<std::size_t> subtracted_;  // base edge indices, sorted
};

/// Builds G^{E+}. E is grouped by head; each head's auxiliary subtracts
/// exactly the tails of its own E-edges.
inline AugmentedGraph augment(const MixedGraph& g, std::span<const std::size_t> edges) {
    AugmentedGraph out;
    out.base_nodes_ = g.node_count();
    out.base_directed_ = g.directed().size();

    std::map<std::size_t, std::vector<std::size_t>> by_head;
    for (std::size_t e : edges) {
        if (e >= g.directed().size()) throw ValidationError("edge not in graph");
        by_head[g.directed()[e].head].push_back(e);
    }

    MixedGraphBuilder b;
    for (const auto& n : g.names()) b.add_node(n);
    for (const auto& e : g.directed()) b.add_directed(g.name(e.tail), g.name(e.head), e.label);
    for (const auto& e : g.bidirected()) b.add_bidirected(g.name(e.a), g.name(e.b), e.label);

    struct Pending {
        std::size_t head;
        std::string aux_name;
        std::vector<std::size_t> base_edges;
    };
    std::vector<Pending> pending;
    for (auto& [head, es] : by_head) {
        std::sort(es.begin(), es.end());
        std::string aux_name = g.name(head) + "*";
        if (g.find_node(aux_name))
            throw ValidationError("auxiliary name collides with existing node: " + aux_name);
        for (std::size_t e : es) out.subtracted_.push_back(e);
        b.add_aux_node(aux_name);
        b.add_directed(g.name(head), aux_name);
        for (std::size_t e : es) b.add_directed(g.name(g.directed()[e].tail), aux_name);
        pending.push_back({head, std::move(aux_name), std::move(es)});
    }
    std::sort(out.subtracted_.begin(), out.subtracted_.end());

    MixedGraph full = b.build();
    for (const auto& p : pending) {
        AugmentedGraph::AuxNode a;
        a.base_head = p.head;
        a.node = full.node(p.aux_name);
        a.unit_edge = *full.find_directed(p.head, a.node);
        for (std::size_t e : p.base_edges) {
            std::size_t tail = full.directed()[e].tail;
            a.minus_edges.emplace_back(*full.find_directed(tail, a.node), e);
        }
        out.aux_.push_back(std::move(a));
    }
    out.full_ = std::move(full);
    return out;
}

namespace detail {

// y* expanded as a signed combination of base nodes
struct AuxExpansion {
    std::vector<std::pair<double, std::size_t>> terms;
};

inline AuxExpansion expand_node(const MixedGraph& g, std::size_t node,
                                std::span<const std::size_t> subtracted,
                                const std::function<double(std::size_t)>& value_of) {
    AuxExpansion ex;
    ex.terms.emplace_back(1.0, node);
    for (std::size_t e : subtracted) {
        if (g.directed()[e].head != node)
            throw ValidationError("subtracted edge does not point at the auxiliary's base node");
        ex.terms.emplace_back(-value_of(e), g.directed()[e].tail);
    }
    return ex;
}

inline double bilinear_cov(const Eigen::MatrixXd& sigma, const AuxExpansion& a,
                           const AuxExpansion& b) {
    double out = 0.0;
    for (const auto& [ca, na] : a.terms)
        for (const auto& [cb, nb] : b.terms) out += ca * cb * sigma(na, nb);
    return out;
}

}  // namespace detail

/**
 * Covariance between two (possibly auxiliary) variables over a base-node
 * covariance matrix. A trailing '*' denotes the auxiliary built from all
 * known edges into the base node, whose numeric values must be present.
 */
inline double aux_covariance(const MixedGraph& g, const Eigen::MatrixXd& sigma,
                             const KnownEdges& known, std::string_view a, std::string_view b) {
    if (a == b) throw ValidationError("aux_covariance requires distinct variables");
    if (sigma.rows() != Eigen::Index(g.node_count()) || sigma.cols() != sigma.rows())
        throw ValidationError("covariance matrix shape does not match graph");
    auto value_of = [&](std::size_t e) {
        auto it = known.find(e);
        if (it == known.end() || !it->second.has_value())
            throw ValidationError("missing numeric value for known edge " + g.edge_name(e));
        return it->second.value;
    };
    auto expand = [&](std::string_view name) {
        bool aux = !name.empty() && name.back() == '*';
        std::string base(aux ? name.substr(0, name.size() - 1) : name);
        std::size_t v = g.node(base);
        if (!aux) return detail::expand_node(g, v, {}, value_of);
        auto sub = known_incident(g, known, v);
        if (sub.empty())
            throw ValidationError("node " + base + " has no known incoming edges; no auxiliary");
        return detail::expand_node(g, v, sub, value_of);
    };
    return detail::bilinear_cov(sigma, expand(a), expand(b));
}

/// Same subtraction arithmetic with an explicit edge list and value map;
/// used by certificate evaluation where the subtracted set is per-instrument.
inline detail::AuxExpansion aux_expansion(const MixedGraph& g, std::size_t node,
                                          std::span<const std::size_t> subtracted,
                                          const std::map<std::size_t, double>& values) {
    return detail::expand_node(g, node, subtracted, [&](std::size_t e) {
        auto it = values.find(e);
        if (it == values.end())
            throw ValidationError("missing numeric value for edge " + g.edge_name(e));
        return it->second;
    });
}

/// Known-coefficient file: lines `tail -> head = value`, '#' comments.
inline KnownEdges parse_known(std::string_view text, const MixedGraph& g) {
    KnownEdges out;
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        std::size_t i = 0;
        detail::skip_ws(line, i);
        if (i >= line.size()) continue;

        std::string tail = detail::read_token(line, i);
        detail::skip_ws(line, i);
        std::string arrow = detail::read_token(line, i);
        detail::skip_ws(line, i);
        std::string head = detail::read_token(line, i);
        detail::skip_ws(line, i);
        std::string eq = detail::read_token(line, i);
        detail::skip_ws(line, i);
        std::string value_str(line.substr(i));
        while (!value_str.empty() && (value_str.back() == ' ' || value_str.back() == '\t'))
            value_str.pop_back();
        if (arrow != "->" || eq != "=" || tail.empty() || head.empty() || value_str.empty())
            throw ParseError("expected `tail -> head = value`", lineno, 1);

        auto t = g.find_node(tail), h = g.find_node(head);
        if (!t || !h) throw ParseError("unknown node in known-coefficient line", lineno, 1);
        auto e = g.find_directed(*t, *h);
        if (!e)
            throw ParseError("no directed edge " + tail + " -> " + head + " in graph", lineno, 1);
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(value_str, &used);
        } catch (const std::exception&) {
            throw ParseError("invalid numeric value: " + value_str, lineno, 1);
        }
        if (used != value_str.size())
            throw ParseError("invalid numeric value: " + value_str, lineno, 1);
        if (out.count(*e)) throw ParseError("duplicate known edge", lineno, 1);
        out[*e] = {KnownCoefficient::Source::external, value, -1};
    }
    return out;
}

}  // namespace semid
