#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <tuple>

#include "graph.hpp"

namespace semid {

struct EnumerationCapError : std::runtime_error {
    explicit EnumerationCapError(std::size_t cap)
        : std::runtime_error("unblocked-path enumeration exceeded cap of " +
                             std::to_string(cap)) {}
};

enum class StepKind { along, against, bidirected };

struct PathStep {
    StepKind kind;
    std::size_t edge;  // index into directed() or bidirected()
};

/// Simple path; nodes.size() == steps.size() + 1. A single node is the
/// zero-length path.
struct Path {
    std::vector<std::size_t> nodes;
    std::vector<PathStep> steps;

    std::size_t source() const { return nodes.front(); }
    std::size_t target() const { return nodes.back(); }
    std::size_t length() const { return steps.size(); }
};

struct SidedDecomposition {
    std::vector<std::size_t> left;   // sorted
    std::vector<std::size_t> right;  // sorted
};

struct PathSystem {
    std::vector<Path> paths;
};

enum class PathKind { unblocked, half_trek };

using EdgeMask = std::vector<char>;  // removed directed edges, indexed like directed()

inline EdgeMask make_edge_mask(const MixedGraph& g, std::span<const std::size_t> removed = {}) {
    EdgeMask m(g.directed().size(), 0);
    for (std::size_t e : removed) m.at(e) = 1;
    return m;
}

namespace detail {

// step points into `node` when traversed on a path touching it
inline bool step_into(const MixedGraph& g, const PathStep& s, std::size_t node) {
    if (s.kind == StepKind::bidirected) return true;
    return g.directed()[s.edge].head == node;
}

struct NodeSet {
    std::vector<char> bits;
    explicit NodeSet(std::size_t n) : bits(n, 0) {}
    NodeSet(std::size_t n, std::span<const std::size_t> items) : bits(n, 0) {
        for (std::size_t v : items) bits.at(v) = 1;
    }
    bool has(std::size_t v) const { return bits[v] != 0; }
    void add(std::size_t v) { bits[v] = 1; }
};

inline NodeSet ancestors_of_set(const MixedGraph& g, std::span<const std::size_t> seed) {
    NodeSet out(g.node_count());
    std::vector<std::size_t> stack(seed.begin(), seed.end());
    for (std::size_t v : stack) out.add(v);
    while (!stack.empty()) {
        std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t p : g.parents(v))
            if (!out.has(p)) { out.add(p); stack.push_back(p); }
    }
    return out;
}

// deterministic per-node adjacency: (neighbor, kind, edge), sorted
struct StepTable {
    struct Entry {
        std::size_t neighbor;
        StepKind kind;
        std::size_t edge;
    };
    std::vector<std::vector<Entry>> at;

    StepTable(const MixedGraph& g, const EdgeMask* removed) : at(g.node_count()) {
        for (std::size_t e = 0; e < g.directed().size(); ++e) {
            if (removed && (*removed)[e]) continue;
            const auto& d = g.directed()[e];
            at[d.tail].push_back({d.head, StepKind::along, e});
            at[d.head].push_back({d.tail, StepKind::against, e});
        }
        for (std::size_t e = 0; e < g.bidirected().size(); ++e) {
            const auto& bd = g.bidirected()[e];
            at[bd.a].push_back({bd.b, StepKind::bidirected, e});
            at[bd.b].push_back({bd.a, StepKind::bidirected, e});
        }
        for (auto& v : at)
            std::sort(v.begin(), v.end(), [](const Entry& l, const Entry& r) {
                return std::tie(l.neighbor, l.kind) < std::tie(r.neighbor, r.kind);
            });
    }
};

}  // namespace detail

inline void validate_path(const MixedGraph& g, const Path& p) {
    if (p.nodes.empty()) throw ValidationError("malformed path: empty node sequence");
    if (p.nodes.size() != p.steps.size() + 1)
        throw ValidationError("malformed path: node/step count mismatch");
    std::set<std::size_t> seen;
    for (std::size_t v : p.nodes) {
        if (v >= g.node_count()) throw ValidationError("malformed path: node out of range");
        if (!seen.insert(v).second) throw ValidationError("malformed path: repeated node");
    }
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        const auto& s = p.steps[i];
        std::size_t u = p.nodes[i], v = p.nodes[i + 1];
        if (s.kind == StepKind::bidirected) {
            const auto& e = g.bidirected().at(s.edge);
            if (!((e.a == u && e.b == v) || (e.a == v && e.b == u)))
                throw ValidationError("malformed path: bidirected step does not join its nodes");
        } else {
            const auto& e = g.directed().at(s.edge);
            std::size_t tail = s.kind == StepKind::along ? u : v;
            std::size_t head = s.kind == StepKind::along ? v : u;
            if (e.tail != tail || e.head != head)
                throw ValidationError("malformed path: directed step does not join its nodes");
        }
    }
}

/// Pearl's unblocking test: every non-collider off the conditioning set,
/// every collider with a conditioned descendant.
inline bool is_unblocked(const MixedGraph& g, const Path& p,
                         std::span<const std::size_t> given = {}) {
    validate_path(g, p);
    detail::NodeSet giv(g.node_count(), given);
    if (giv.has(p.source()) || giv.has(p.target()))
        throw ValidationError("path endpoint appears in the conditioning set");
    detail::NodeSet anc = detail::ancestors_of_set(g, given);
    for (std::size_t i = 1; i + 1 <= p.steps.size(); ++i) {
        std::size_t v = p.nodes[i];
        bool collider = detail::step_into(g, p.steps[i - 1], v) &&
                        detail::step_into(g, p.steps[i], v);
        if (collider) {
            if (!anc.has(v)) return false;
        } else {
            if (giv.has(v)) return false;
        }
    }
    return true;
}

/**
 * All simple unblocked paths between x and y, ordered lexicographically by
 * node index sequence. Throws EnumerationCapError past `cap` results.
 */
inline std::vector<Path> enumerate_unblocked_paths(const MixedGraph& g, std::size_t x,
                                                   std::size_t y,
                                                   std::span<const std::size_t> given = {},
                                                   std::size_t cap = 100000,
                                                   const EdgeMask* removed = nullptr) {
    if (x == y) throw ValidationError("path endpoints must differ");
    if (x >= g.node_count() || y >= g.node_count()) throw ValidationError("unknown node");
    detail::NodeSet giv(g.node_count(), given);
    if (giv.has(x) || giv.has(y)) throw ValidationError("endpoint in conditioning set");
    if (cap == 0) throw ValidationError("cap must be positive");
    detail::NodeSet anc = detail::ancestors_of_set(g, given);
    detail::StepTable table(g, removed);

    std::vector<Path> out;
    Path cur;
    cur.nodes.push_back(x);
    std::vector<char> onpath(g.node_count(), 0);
    onpath[x] = 1;

    std::function<void()> dfs = [&] {
        std::size_t v = cur.nodes.back();
        for (const auto& st : table.at[v]) {
            if (onpath[st.neighbor]) continue;
            // blocking status of v once it becomes internal
            if (!cur.steps.empty()) {
                bool into_prev = detail::step_into(g, cur.steps.back(), v);
                bool into_next = st.kind == StepKind::bidirected
                                     ? true
                                     : g.directed()[st.edge].head == v;
                bool collider = into_prev && into_next;
                if (collider ? !anc.has(v) : giv.has(v)) continue;
            }
            cur.nodes.push_back(st.neighbor);
            cur.steps.push_back({st.kind, st.edge});
            if (st.neighbor == y) {
                if (out.size() >= cap) throw EnumerationCapError(cap);
                out.push_back(cur);
            } else {
                onpath[st.neighbor] = 1;
                dfs();
                onpath[st.neighbor] = 0;
            }
            cur.nodes.pop_back();
            cur.steps.pop_back();
        }
    };
    dfs();
    return out;
}

/**
 * d-separation by reachability over the bidirected-to-latent expansion;
 * equivalent to enumerate_unblocked_paths(...).empty() but linear-time.
 */
inline bool d_separated(const MixedGraph& g, std::size_t x, std::size_t y,
                        std::span<const std::size_t> given = {},
                        const EdgeMask* removed = nullptr) {
    if (x == y) throw ValidationError("d-separation requires distinct nodes");
    if (x >= g.node_count() || y >= g.node_count()) throw ValidationError("unknown node");
    detail::NodeSet giv(g.node_count(), given);
    if (giv.has(x) || giv.has(y)) throw ValidationError("endpoint in conditioning set");

    // expanded DAG: original nodes + one latent per bidirected edge
    std::size_t n = g.node_count();
    std::size_t total = n + g.bidirected().size();
    std::vector<std::vector<std::size_t>> parents(total), children(total);
    for (std::size_t e = 0; e < g.directed().size(); ++e) {
        if (removed && (*removed)[e]) continue;
        const auto& d = g.directed()[e];
        parents[d.head].push_back(d.tail);
        children[d.tail].push_back(d.head);
    }
    for (std::size_t e = 0; e < g.bidirected().size(); ++e) {
        std::size_t lat = n + e;
        const auto& bd = g.bidirected()[e];
        children[lat] = {bd.a, bd.b};
        parents[bd.a].push_back(lat);
        parents[bd.b].push_back(lat);
    }

    std::vector<char> in_anc(total, 0);
    {
        std::vector<std::size_t> stack(given.begin(), given.end());
        for (std::size_t v : stack) in_anc[v] = 1;
        while (!stack.empty()) {
            std::size_t v = stack.back();
            stack.pop_back();
            for (std::size_t p : parents[v])
                if (!in_anc[p]) { in_anc[p] = 1; stack.push_back(p); }
        }
    }
    auto conditioned = [&](std::size_t v) { return v < n && giv.has(v); };

    // states: arrival via an edge into v (head) or out of v (tail)
    enum : int { head_arr = 0, tail_arr = 1 };
    std::vector<std::array<char, 2>> seen(total, {0, 0});
    std::vector<std::pair<std::size_t, int>> stack;
    auto push = [&](std::size_t v, int arr) {
        if (!seen[v][arr]) { seen[v][arr] = 1; stack.emplace_back(v, arr); }
    };
    for (std::size_t c : children[x]) push(c, head_arr);
    for (std::size_t p : parents[x]) push(p, tail_arr);
    while (!stack.empty()) {
        auto [v, arr] = stack.back();
        stack.pop_back();
        if (v == y) return false;
        bool may_go_down = !conditioned(v);
        bool may_go_up = arr == head_arr ? in_anc[v] != 0 : !conditioned(v);
        if (may_go_down)
            for (std::size_t c : children[v]) push(c, head_arr);
        if (may_go_up)
            for (std::size_t p : parents[v]) push(p, tail_arr);
    }
    return true;
}

/// htr(v): nodes w != v reachable by a directed path or by one bidirected
/// hop followed by a directed path.
inline std::vector<std::size_t> half_trek_reachable(const MixedGraph& g, std::size_t v) {
    if (v >= g.node_count()) throw ValidationError("unknown node");
    std::vector<char> seen(g.node_count(), 0);
    std::vector<std::size_t> stack;
    auto visit = [&](std::size_t u) {
        if (!seen[u]) { seen[u] = 1; stack.push_back(u); }
    };
    for (std::size_t c : g.children(v)) visit(c);
    for (std::size_t s : g.siblings(v)) visit(s);
    while (!stack.empty()) {
        std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t c : g.children(u)) visit(c);
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (seen[i] && i != v) out.push_back(i);
    return out;
}

/**
 * Left/Right split of a trek around its top. For a path from x to y:
 * Left holds x and every node whose path edge leaves it toward x, Right
 * holds y and every node whose path edge leaves it toward y; a single
 * divergent top lands in both sides.
 */
inline SidedDecomposition sided_decomposition(const MixedGraph& g, const Path& p) {
    validate_path(g, p);
    if (!is_unblocked(g, p, {}))
        throw ValidationError("path has a collider and is not a trek");
    std::set<std::size_t> left{p.source()}, right{p.target()};
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        if (p.steps[i].kind == StepKind::along)
            right.insert(p.nodes[i]);
        else if (p.steps[i].kind == StepKind::against)
            left.insert(p.nodes[i + 1]);
    }
    return {{left.begin(), left.end()}, {right.begin(), right.end()}};
}

/// Def.-3 predicate: pairwise disjoint Lefts and pairwise disjoint Rights.
inline bool has_no_sided_intersection(const MixedGraph& g, std::span<const Path> paths) {
    std::size_t n = g.node_count();
    detail::NodeSet usedL(n), usedR(n);
    for (const auto& p : paths) {
        SidedDecomposition d = sided_decomposition(g, p);
        for (std::size_t v : d.left) {
            if (usedL.has(v)) return false;
            usedL.add(v);
        }
        for (std::size_t v : d.right) {
            if (usedR.has(v)) return false;
            usedR.add(v);
        }
    }
    return true;
}

namespace detail {

// candidate paths from src to tgt of the requested kind, lexicographic order
inline std::vector<Path> candidate_paths(const MixedGraph& g, std::size_t src, std::size_t tgt,
                                         PathKind kind, std::size_t cap = 100000) {
    std::vector<Path> out;
    if (src == tgt) {
        out.push_back(Path{{src}, {}});
        return out;
    }
    if (kind == PathKind::unblocked) {
        out = enumerate_unblocked_paths(g, src, tgt, {}, cap);
        return out;
    }
    // half-treks: optional bidirected first step, then directed steps forward
    StepTable table(g, nullptr);
    Path cur;
    cur.nodes.push_back(src);
    std::vector<char> onpath(g.node_count(), 0);
    onpath[src] = 1;
    std::function<void()> dfs = [&] {
        std::size_t v = cur.nodes.back();
        for (const auto& st : table.at[v]) {
            if (onpath[st.neighbor]) continue;
            if (cur.steps.empty()) {
                if (st.kind == StepKind::against) continue;
            } else {
                if (st.kind != StepKind::along) continue;
            }
            cur.nodes.push_back(st.neighbor);
            cur.steps.push_back({st.kind, st.edge});
            if (st.neighbor == tgt) {
                if (out.size() >= cap) throw EnumerationCapError(cap);
                out.push_back(cur);
            } else {
                onpath[st.neighbor] = 1;
                dfs();
                onpath[st.neighbor] = 0;
            }
            cur.nodes.pop_back();
            cur.steps.pop_back();
        }
    };
    dfs();
    return out;
}

}  // namespace detail

/// Memo for candidate path lists, keyed by (source, target, kind).
class PathCache {
  public:
    const std::vector<Path>& get(const MixedGraph& g, std::size_t src, std::size_t tgt,
                                 PathKind kind) {
        auto key = std::make_tuple(src, tgt, kind == PathKind::half_trek);
        auto it = memo_.find(key);
        if (it == memo_.end())
            it = memo_.emplace(key, detail::candidate_paths(g, src, tgt, kind)).first;
        return it->second;
    }
    void clear() { memo_.clear(); }

  private:
    std::map<std::tuple<std::size_t, std::size_t, bool>, std::vector<Path>> memo_;
};

struct MatchedSystem {
    std::vector<std::size_t> sources;  // sources[i] pairs targets[i]
    PathSystem system;
};

/**
 * System of paths with no sided intersection from `sources` to `targets`.
 * When `paired`, path i must run sources[i] -> targets[i]; otherwise any
 * bijection is admissible and the chosen alignment is returned. Search is
 * deterministic (slots in order, sources then paths lexicographically).
 */
inline std::optional<MatchedSystem> find_path_system_impl(
    const MixedGraph& g, std::span<const std::size_t> sources,
    std::span<const std::size_t> targets, PathKind kind, bool paired,
    PathCache* cache = nullptr) {
    if (sources.size() != targets.size())
        throw ValidationError("path system requires |sources| == |targets|");
    std::size_t k = targets.size();
    std::size_t n = g.node_count();
    PathCache local;
    PathCache& pc = cache ? *cache : local;

    std::vector<char> usedL(n, 0), usedR(n, 0), src_used(sources.size(), 0);
    std::vector<const Path*> chosen(k, nullptr);
    std::vector<std::size_t> align(k, 0);
    std::vector<SidedDecomposition> decos(k);

    std::function<bool(std::size_t)> solve = [&](std::size_t slot) -> bool {
        if (slot == k) return true;
        for (std::size_t si = 0; si < sources.size(); ++si) {
            if (paired && si != slot) continue;
            if (src_used[si]) continue;
            const auto& cands = pc.get(g, sources[si], targets[slot], kind);
            for (const Path& p : cands) {
                SidedDecomposition d = sided_decomposition(g, p);
                bool clash = false;
                for (std::size_t v : d.left)
                    if (usedL[v]) { clash = true; break; }
                if (!clash)
                    for (std::size_t v : d.right)
                        if (usedR[v]) { clash = true; break; }
                if (clash) continue;
                for (std::size_t v : d.left) usedL[v] = 1;
                for (std::size_t v : d.right) usedR[v] = 1;
                src_used[si] = 1;
                chosen[slot] = &p;
                align[slot] = sources[si];
                if (solve(slot + 1)) return true;
                src_used[si] = 0;
                for (std::size_t v : d.left) usedL[v] = 0;
                for (std::size_t v : d.right) usedR[v] = 0;
            }
        }
        return false;
    };
    if (!solve(0)) return std::nullopt;
    MatchedSystem ms;
    ms.sources = align;
    for (std::size_t i = 0; i < k; ++i) ms.system.paths.push_back(*chosen[i]);
    return ms;
}

/// Index-paired variant: path i runs sources[i] -> targets[i].
inline std::optional<PathSystem> find_path_system(const MixedGraph& g,
                                                  std::span<const std::size_t> sources,
                                                  std::span<const std::size_t> targets,
                                                  PathKind kind, PathCache* cache = nullptr) {
    auto ms = find_path_system_impl(g, sources, targets, kind, /*paired=*/true, cache);
    if (!ms) return std::nullopt;
    return std::move(ms->system);
}

}  // namespace semid
