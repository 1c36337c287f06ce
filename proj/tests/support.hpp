#pragma once

#include <fstream>
#include <random>

#include <semid/semid.hpp>

// Fixture loading plus self-contained brute-force oracles. The oracles
// re-derive path semantics from the definitions without touching the
// library's search code, so they can arbitrate its answers.
namespace support {

using namespace semid;

inline std::string data_path(const std::string& name) {
    return std::string(SEMID_DATA_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline MixedGraph load_graph(const std::string& name) {
    return MixedGraph::parse(slurp(data_path(name)));
}

inline std::size_t edge(const MixedGraph& g, const std::string& tail, const std::string& head) {
    auto e = g.find_directed(g.node(tail), g.node(head));
    if (!e) throw std::runtime_error("no edge " + tail + "->" + head);
    return *e;
}

inline std::vector<std::size_t> nodes(const MixedGraph& g,
                                      std::initializer_list<const char*> names) {
    std::vector<std::size_t> out;
    for (const char* n : names) out.push_back(g.node(n));
    return out;
}

// ---- brute-force path oracle -------------------------------------------

// every simple path between x and y, depth-first over a locally assembled
// adjacency structure
inline std::vector<Path> all_simple_paths(const MixedGraph& g, std::size_t x, std::size_t y) {
    struct Adj {
        std::size_t to;
        StepKind kind;
        std::size_t edge;
    };
    std::vector<std::vector<Adj>> adj(g.node_count());
    for (std::size_t e = 0; e < g.directed().size(); ++e) {
        adj[g.directed()[e].tail].push_back({g.directed()[e].head, StepKind::along, e});
        adj[g.directed()[e].head].push_back({g.directed()[e].tail, StepKind::against, e});
    }
    for (std::size_t e = 0; e < g.bidirected().size(); ++e) {
        adj[g.bidirected()[e].a].push_back({g.bidirected()[e].b, StepKind::bidirected, e});
        adj[g.bidirected()[e].b].push_back({g.bidirected()[e].a, StepKind::bidirected, e});
    }
    std::vector<Path> out;
    Path cur;
    cur.nodes.push_back(x);
    std::vector<char> used(g.node_count(), 0);
    used[x] = 1;
    std::function<void(std::size_t)> dfs = [&](std::size_t v) {
        if (v == y) {
            out.push_back(cur);
            return;
        }
        for (const auto& a : adj[v]) {
            if (used[a.to]) continue;
            used[a.to] = 1;
            cur.nodes.push_back(a.to);
            cur.steps.push_back({a.kind, a.edge});
            dfs(a.to);
            cur.nodes.pop_back();
            cur.steps.pop_back();
            used[a.to] = 0;
        }
    };
    dfs(x);
    return out;
}

inline bool oracle_step_into(const MixedGraph& g, const PathStep& s, std::size_t v) {
    return s.kind == StepKind::bidirected || g.directed()[s.edge].head == v;
}

inline bool oracle_unblocked(const MixedGraph& g, const Path& p,
                             const std::set<std::size_t>& given) {
    std::set<std::size_t> anc;
    std::function<void(std::size_t)> up = [&](std::size_t v) {
        if (!anc.insert(v).second) return;
        for (std::size_t parent : g.parents(v)) up(parent);
    };
    for (std::size_t v : given) up(v);
    for (std::size_t i = 1; i < p.nodes.size() - 1; ++i) {
        std::size_t v = p.nodes[i];
        bool collider =
            oracle_step_into(g, p.steps[i - 1], v) && oracle_step_into(g, p.steps[i], v);
        if (collider ? !anc.count(v) : given.count(v) != 0) return false;
    }
    return true;
}

inline std::vector<Path> oracle_unblocked_paths(const MixedGraph& g, std::size_t x,
                                                std::size_t y,
                                                const std::set<std::size_t>& given = {}) {
    std::vector<Path> out;
    for (auto& p : all_simple_paths(g, x, y))
        if (oracle_unblocked(g, p, given)) out.push_back(std::move(p));
    return out;
}

inline bool oracle_d_separated(const MixedGraph& g, std::size_t x, std::size_t y,
                               const std::set<std::size_t>& given = {}) {
    return oracle_unblocked_paths(g, x, y, given).empty();
}

// Left/Right per Def. 2, recomputed from scratch
inline std::pair<std::set<std::size_t>, std::set<std::size_t>> oracle_sides(const MixedGraph& g,
                                                                            const Path& p) {
    std::set<std::size_t> left{p.nodes.front()}, right{p.nodes.back()};
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        if (p.steps[i].kind == StepKind::along)
            right.insert(p.nodes[i]);
        else if (p.steps[i].kind == StepKind::against)
            left.insert(p.nodes[i + 1]);
    }
    return {left, right};
}

inline bool oracle_half_trek_shape(const Path& p) {
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        if (i == 0 && p.steps[i].kind == StepKind::bidirected) continue;
        if (p.steps[i].kind != StepKind::along) return false;
    }
    return true;
}

/// Exhaustive tuple search: does a no-sided-intersection system exist with
/// path i running sources[i] -> targets[i]?
inline bool oracle_system_exists(const MixedGraph& g, std::span<const std::size_t> sources,
                                 std::span<const std::size_t> targets, PathKind kind) {
    std::size_t k = sources.size();
    std::vector<std::vector<std::pair<std::set<std::size_t>, std::set<std::size_t>>>> sides(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<Path> cands;
        if (sources[i] == targets[i]) {
            cands.push_back(Path{{sources[i]}, {}});
        } else {
            for (auto& p : all_simple_paths(g, sources[i], targets[i])) {
                if (kind == PathKind::half_trek ? oracle_half_trek_shape(p)
                                                : oracle_unblocked(g, p, {}))
                    cands.push_back(std::move(p));
            }
        }
        for (const auto& p : cands) sides[i].push_back(oracle_sides(g, p));
        if (sides[i].empty()) return false;
    }
    std::vector<std::size_t> pick(k, 0);
    std::function<bool(std::size_t)> rec = [&](std::size_t slot) -> bool {
        if (slot == k) return true;
        for (std::size_t c = 0; c < sides[slot].size(); ++c) {
            bool ok = true;
            for (std::size_t j = 0; j < slot && ok; ++j) {
                const auto& a = sides[slot][c];
                const auto& b = sides[j][pick[j]];
                for (std::size_t v : a.first)
                    if (b.first.count(v)) { ok = false; break; }
                if (ok)
                    for (std::size_t v : a.second)
                        if (b.second.count(v)) { ok = false; break; }
            }
            if (!ok) continue;
            pick[slot] = c;
            if (rec(slot + 1)) return true;
        }
        return false;
    };
    return rec(0);
}

// ---- deterministic random graphs ----------------------------------------

struct GraphGen {
    std::mt19937_64 eng;
    explicit GraphGen(std::uint64_t seed) : eng(seed) {}
    double unit() { return std::ldexp(double(eng() >> 11), -53); }

    MixedGraph operator()(int min_nodes = 3, int max_nodes = 8) {
        int n = min_nodes + int(eng() % std::uint64_t(max_nodes - min_nodes + 1));
        double pd = 0.18 + 0.22 * unit();
        double pb = 0.12 + 0.18 * unit();
        MixedGraphBuilder b;
        for (int i = 1; i <= n; ++i) b.add_node("v" + std::to_string(i));
        for (int i = 1; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j) {
                if (unit() < pd)
                    b.add_directed("v" + std::to_string(i), "v" + std::to_string(j));
                if (unit() < pb)
                    b.add_bidirected("v" + std::to_string(i), "v" + std::to_string(j));
            }
        return b.build();
    }
};

}  // namespace support
