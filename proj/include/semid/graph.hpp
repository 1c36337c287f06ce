#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semid {

struct ParseError : std::runtime_error {
    int line = 0;
    int column = 0;
    ParseError(const std::string& msg, int line_, int column_)
        : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                             std::to_string(column_) + ": " + msg),
          line(line_), column(column_) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Directed edge tail -> head, carrying its structural-coefficient symbol.
struct DirectedEdge {
    std::size_t tail = 0;
    std::size_t head = 0;
    std::string label;
};

/// Bidirected edge (correlated errors), endpoints stored with a < b.
struct BidirectedEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    std::string label;
};

/// Parents, siblings, ancestors and incoming edges of one node.
struct NodeRelations {
    std::vector<std::size_t> parents;
    std::vector<std::size_t> siblings;
    std::vector<std::size_t> ancestors;       // reflexive-transitive, sorted
    std::vector<std::size_t> incident_edges;  // directed edges with this head
};

class MixedGraphBuilder;

/**
 * Acyclic mixed graph: directed edges labelled with coefficient symbols,
 * bidirected edges with error-covariance symbols. Immutable once built;
 * node order is declaration order and fixes all deterministic iteration
 * downstream.
 */
class MixedGraph {
  public:
    MixedGraph() = default;

    std::size_t node_count() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(std::size_t v) const { return names_.at(v); }

    std::optional<std::size_t> find_node(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    std::size_t node(std::string_view name) const {
        auto v = find_node(name);
        if (!v) throw ValidationError("unknown node: " + std::string(name));
        return *v;
    }

    const std::vector<DirectedEdge>& directed() const { return directed_; }
    const std::vector<BidirectedEdge>& bidirected() const { return bidirected_; }

    std::optional<std::size_t> find_directed(std::size_t tail, std::size_t head) const {
        auto it = directed_by_pair_.find(key(tail, head));
        if (it == directed_by_pair_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<std::size_t> find_directed(std::string_view label) const {
        auto it = directed_by_label_.find(std::string(label));
        if (it == directed_by_label_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<std::size_t> find_bidirected(std::size_t a, std::size_t b) const {
        auto it = bidirected_by_pair_.find(key(std::min(a, b), std::max(a, b)));
        if (it == bidirected_by_pair_.end()) return std::nullopt;
        return it->second;
    }

    const std::vector<std::size_t>& parents(std::size_t v) const { return parents_.at(v); }
    const std::vector<std::size_t>& children(std::size_t v) const { return children_.at(v); }
    const std::vector<std::size_t>& siblings(std::size_t v) const { return siblings_.at(v); }
    /// Directed edges with head v (the spec's Inc(v)), as indices into directed().
    const std::vector<std::size_t>& incident_edges(std::size_t v) const { return incident_.at(v); }
    /// Directed edges with tail v.
    const std::vector<std::size_t>& outgoing_edges(std::size_t v) const { return outgoing_.at(v); }
    /// Bidirected edges touching v.
    const std::vector<std::size_t>& bidirected_at(std::size_t v) const { return bidirected_at_.at(v); }

    /// Declaration-order-stable topological order of the directed part.
    const std::vector<std::size_t>& topological_order() const { return topo_; }

    /// Reflexive-transitive ancestors (sorted node indices).
    std::vector<std::size_t> ancestors(std::size_t v) const {
        check_node(v);
        std::vector<char> seen(node_count(), 0);
        std::vector<std::size_t> stack{v};
        seen[v] = 1;
        while (!stack.empty()) {
            std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t p : parents_[u])
                if (!seen[p]) { seen[p] = 1; stack.push_back(p); }
        }
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < seen.size(); ++i)
            if (seen[i]) out.push_back(i);
        return out;
    }

    NodeRelations relations(std::size_t v) const {
        check_node(v);
        NodeRelations r;
        r.parents = parents_[v];
        r.siblings = siblings_[v];
        r.ancestors = ancestors(v);
        r.incident_edges = incident_[v];
        return r;
    }

    std::string edge_name(const DirectedEdge& e) const {
        return name(e.tail) + "->" + name(e.head);
    }
    std::string edge_name(std::size_t e) const { return edge_name(directed_.at(e)); }

    /// Canonical form: node declarations, then directed edges, then bidirected.
    std::string serialize() const {
        std::ostringstream os;
        for (const auto& n : names_) os << "node " << n << "\n";
        for (const auto& e : directed_)
            os << name(e.tail) << " -> " << name(e.head) << " [" << e.label << "]\n";
        for (const auto& e : bidirected_)
            os << name(e.a) << " <-> " << name(e.b) << " [" << e.label << "]\n";
        return os.str();
    }

    static MixedGraph parse(std::string_view text);

  private:
    friend class MixedGraphBuilder;

    static std::uint64_t key(std::size_t a, std::size_t b) {
        return (std::uint64_t(a) << 32) | std::uint64_t(b);
    }
    void check_node(std::size_t v) const {
        if (v >= node_count()) throw ValidationError("node index out of range");
    }

    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<DirectedEdge> directed_;
    std::vector<BidirectedEdge> bidirected_;
    std::unordered_map<std::uint64_t, std::size_t> directed_by_pair_;
    std::unordered_map<std::string, std::size_t> directed_by_label_;
    std::unordered_map<std::uint64_t, std::size_t> bidirected_by_pair_;
    std::vector<std::vector<std::size_t>> parents_, children_, siblings_;
    std::vector<std::vector<std::size_t>> incident_, outgoing_, bidirected_at_;
    std::vector<std::size_t> topo_;
};

class MixedGraphBuilder {
  public:
    std::size_t add_node(std::string_view name) {
        auto it = g_.index_.find(std::string(name));
        if (it != g_.index_.end()) return it->second;
        validate_name(name);
        return insert_node(name);
    }

    /// Auxiliary nodes carry a trailing '*', which ordinary names may not;
    /// used by augment(), never by the parser.
    std::size_t add_aux_node(std::string_view name) {
        auto it = g_.index_.find(std::string(name));
        if (it != g_.index_.end()) return it->second;
        if (name.size() < 2 || name.back() != '*')
            throw ValidationError("auxiliary node name must end in '*'");
        validate_name(name.substr(0, name.size() - 1));
        return insert_node(name);
    }

    void add_directed(std::string_view tail, std::string_view head, std::string label = "") {
        std::size_t t = add_node(tail), h = add_node(head);
        if (t == h) throw ValidationError("self-loop on node " + std::string(tail));
        if (g_.directed_by_pair_.count(MixedGraph::key(t, h)))
            throw ValidationError("duplicate directed edge " + std::string(tail) + " -> " +
                                  std::string(head));
        if (label.empty()) label = std::string(tail) + "_" + std::string(head);
        if (g_.directed_by_label_.count(label))
            throw ValidationError("duplicate edge label: " + label);
        g_.directed_by_label_.emplace(label, g_.directed_.size());
        g_.directed_by_pair_.emplace(MixedGraph::key(t, h), g_.directed_.size());
        g_.directed_.push_back({t, h, std::move(label)});
    }

    void add_bidirected(std::string_view a, std::string_view b, std::string label = "") {
        std::size_t x = add_node(a), y = add_node(b);
        if (x == y) throw ValidationError("self-loop on node " + std::string(a));
        if (x > y) std::swap(x, y);
        if (g_.bidirected_by_pair_.count(MixedGraph::key(x, y)))
            throw ValidationError("duplicate bidirected edge " + std::string(a) + " <-> " +
                                  std::string(b));
        if (label.empty()) label = g_.names_[x] + "<>" + g_.names_[y];
        g_.bidirected_by_pair_.emplace(MixedGraph::key(x, y), g_.bidirected_.size());
        g_.bidirected_.push_back({x, y, std::move(label)});
    }

    /// Validates acyclicity and freezes adjacency; the builder is spent afterwards.
    MixedGraph build() {
        std::size_t n = g_.names_.size();
        g_.parents_.assign(n, {});
        g_.children_.assign(n, {});
        g_.siblings_.assign(n, {});
        g_.incident_.assign(n, {});
        g_.outgoing_.assign(n, {});
        g_.bidirected_at_.assign(n, {});
        for (std::size_t i = 0; i < g_.directed_.size(); ++i) {
            const auto& e = g_.directed_[i];
            g_.parents_[e.head].push_back(e.tail);
            g_.children_[e.tail].push_back(e.head);
            g_.incident_[e.head].push_back(i);
            g_.outgoing_[e.tail].push_back(i);
        }
        for (std::size_t i = 0; i < g_.bidirected_.size(); ++i) {
            const auto& e = g_.bidirected_[i];
            g_.siblings_[e.a].push_back(e.b);
            g_.siblings_[e.b].push_back(e.a);
            g_.bidirected_at_[e.a].push_back(i);
            g_.bidirected_at_[e.b].push_back(i);
        }
        for (std::size_t v = 0; v < n; ++v) {
            std::sort(g_.parents_[v].begin(), g_.parents_[v].end());
            std::sort(g_.children_[v].begin(), g_.children_[v].end());
            std::sort(g_.siblings_[v].begin(), g_.siblings_[v].end());
        }
        compute_topo();
        return std::move(g_);
    }

  private:
    std::size_t insert_node(std::string_view name) {
        std::size_t id = g_.names_.size();
        g_.names_.emplace_back(name);
        g_.index_.emplace(std::string(name), id);
        return id;
    }

    static void validate_name(std::string_view name) {
        if (name.empty()) throw ValidationError("empty node name");
        for (char c : name) {
            bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '_' || c == '.';
            if (!ok)
                throw ValidationError("invalid character in node name: " + std::string(name));
        }
    }

    // Kahn's algorithm, ties broken by declaration order; reports one cycle on failure.
    void compute_topo() {
        std::size_t n = g_.names_.size();
        std::vector<std::size_t> indeg(n, 0);
        for (const auto& e : g_.directed_) ++indeg[e.head];
        std::set<std::size_t> ready;
        for (std::size_t v = 0; v < n; ++v)
            if (indeg[v] == 0) ready.insert(v);
        std::vector<std::size_t>& topo = g_.topo_;
        topo.clear();
        while (!ready.empty()) {
            std::size_t v = *ready.begin();
            ready.erase(ready.begin());
            topo.push_back(v);
            for (std::size_t c : g_.children_[v])
                if (--indeg[c] == 0) ready.insert(c);
        }
        if (topo.size() == n) return;

        // walk parent links among leftover nodes until a node repeats
        std::size_t start = 0;
        while (indeg[start] == 0) ++start;
        std::vector<std::size_t> trail;
        std::vector<int> pos(n, -1);
        std::size_t v = start;
        while (pos[v] < 0) {
            pos[v] = int(trail.size());
            trail.push_back(v);
            for (std::size_t p : g_.parents_[v])
                if (indeg[p] > 0) { v = p; break; }
        }
        std::string cyc;
        for (std::size_t i = pos[v]; i < trail.size(); ++i)
            cyc += g_.names_[trail[i]] + " <- ";
        cyc += g_.names_[v];
        throw ValidationError("directed part is cyclic: " + cyc);
    }

    MixedGraph g_;
};

namespace detail {

inline void skip_ws(std::string_view line, std::size_t& i) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
}

inline std::string read_token(std::string_view line, std::size_t& i) {
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '[') ++i;
    return std::string(line.substr(start, i - start));
}

}  // namespace detail

inline MixedGraph MixedGraph::parse(std::string_view text) {
    MixedGraphBuilder b;
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

        auto fail = [&](const std::string& msg, std::size_t col) -> void {
            throw ParseError(msg, lineno, int(col) + 1);
        };
        auto wrap = [&](auto&& fn) {
            try {
                fn();
            } catch (const ValidationError& e) {
                throw ParseError(e.what(), lineno, int(i) + 1);
            }
        };

        std::size_t first_col = i;
        std::string tok = detail::read_token(line, i);
        if (tok == "node") {
            detail::skip_ws(line, i);
            std::string name = detail::read_token(line, i);
            if (name.empty()) fail("expected node name", i);
            detail::skip_ws(line, i);
            if (i < line.size()) fail("trailing characters after node declaration", i);
            wrap([&] { b.add_node(name); });
            continue;
        }
        if (tok.empty()) fail("expected node name or 'node'", first_col);

        detail::skip_ws(line, i);
        std::size_t arrow_col = i;
        std::string arrow = detail::read_token(line, i);
        bool directed = arrow == "->";
        bool bidir = arrow == "<->";
        if (!directed && !bidir) fail("expected '->' or '<->'", arrow_col);
        detail::skip_ws(line, i);
        std::string other = detail::read_token(line, i);
        if (other.empty()) fail("expected target node name", i);
        detail::skip_ws(line, i);
        std::string label;
        if (i < line.size() && line[i] == '[') {
            std::size_t close = line.find(']', i);
            if (close == std::string_view::npos) fail("unterminated label", i);
            label = std::string(line.substr(i + 1, close - i - 1));
            if (label.empty()) fail("empty label", i);
            i = close + 1;
            detail::skip_ws(line, i);
        }
        if (i < line.size()) fail("trailing characters after edge", i);
        wrap([&] {
            if (directed)
                b.add_directed(tok, other, label);
            else
                b.add_bidirected(tok, other, label);
        });
    }
    try {
        return b.build();
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), lineno, 1);
    }
}

}  // namespace semid
