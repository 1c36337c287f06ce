#pragma once

#include "augment.hpp"

namespace semid {

struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Method { simple_is, aux_is, quasi, ghtc };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::simple_is: return "simpleIS";
        case Method::aux_is: return "auxIS";
        case Method::quasi: return "quasi";
        case Method::ghtc: return "gHTC";
    }
    return "?";
}

/// Nonempty set of directed edges sharing one head.
struct EdgeSet {
    std::size_t head = 0;
    std::vector<std::size_t> edges;  // sorted edge indices

    static EdgeSet of(const MixedGraph& g, std::vector<std::size_t> edges) {
        if (edges.empty()) throw ValidationError("edge set must be nonempty");
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        std::size_t head = g.directed().at(edges.front()).head;
        for (std::size_t e : edges)
            if (g.directed().at(e).head != head)
                throw ValidationError("edge set must share a single head");
        return {head, std::move(edges)};
    }

    std::vector<std::size_t> tails(const MixedGraph& g) const {
        std::vector<std::size_t> out;
        for (std::size_t e : edges) out.push_back(g.directed()[e].tail);
        return out;
    }
    std::size_t size() const { return edges.size(); }
};

/**
 * Executable identification recipe: instruments[i] supplies the equation for
 * tails()[i]; subtracted[i] are the known edges removed from instrument i's
 * side, head_subtracted the known head edges removed for quasi-instruments.
 * The witness path system realizes condition (iii).
 */
struct Certificate {
    EdgeSet target;
    std::vector<std::size_t> instruments;
    std::vector<std::vector<std::size_t>> subtracted;
    std::vector<std::size_t> head_subtracted;
    PathSystem witness;
    Method method = Method::simple_is;
};

struct SearchBudget {
    std::size_t max_edge_set = 8;
    std::size_t max_pool = 20;
    std::size_t path_cap = 100000;
};

struct DerivedEdgeSet {
    Certificate certificate;
    int round = 0;
};

struct IdentificationResult {
    std::vector<DerivedEdgeSet> identified;  // derivation order
    std::vector<std::size_t> unidentified;   // sorted edge indices
    std::vector<std::size_t> external;       // externally known, never re-derived
    int rounds = 0;
    std::vector<std::string> budget_notes;

    bool all_identified() const { return unidentified.empty(); }
};

namespace detail {

inline std::vector<std::size_t> known_keys(const KnownEdges& known) {
    std::vector<std::size_t> out;
    for (const auto& [e, info] : known) out.push_back(e);
    return out;
}

// condition (ii) of Thm. 1: (z _||_ y) in G with E, the known edges into z,
// and any extra head-side removals deleted
inline bool instrument_separated(const MixedGraph& g, std::size_t z, std::size_t y,
                                 const EdgeSet& E, const KnownEdges& known,
                                 std::span<const std::size_t> head_removed) {
    if (z == y) return false;
    EdgeMask mask = make_edge_mask(g, E.edges);
    for (std::size_t e : g.incident_edges(z))
        if (known.count(e)) mask[e] = 1;
    for (std::size_t e : head_removed) mask[e] = 1;
    return d_separated(g, z, y, {}, &mask);
}

inline std::optional<Certificate> assemble(const MixedGraph& g, const EdgeSet& E,
                                           std::span<const std::size_t> Z,
                                           const KnownEdges& known,
                                           std::vector<std::size_t> head_subtracted,
                                           Method base_method, PathCache* cache) {
    auto ms = find_path_system_impl(g, Z, E.tails(g), PathKind::unblocked,
                                    /*paired=*/false, cache);
    if (!ms) return std::nullopt;
    Certificate cert;
    cert.target = E;
    cert.instruments = ms->sources;
    cert.witness = std::move(ms->system);
    cert.head_subtracted = std::move(head_subtracted);
    bool any_sub = !cert.head_subtracted.empty();
    for (std::size_t z : cert.instruments) {
        cert.subtracted.push_back(known_incident(g, known, z));
        any_sub = any_sub || !cert.subtracted.back().empty();
    }
    cert.method = base_method == Method::quasi ? Method::quasi
                  : any_sub                    ? Method::aux_is
                                               : Method::simple_is;
    return cert;
}

}  // namespace detail

/**
 * Auxiliary instrumental set test (Thm. 1): Z qualifies for E when every
 * z, after deleting E and z's known incoming edges, is d-separated from
 * the head, and some assignment of Z to the tails admits an unblocked path
 * system with no sided intersection.
 */
inline std::optional<Certificate> check_aux_is(const MixedGraph& g,
                                               std::span<const std::size_t> Z, const EdgeSet& E,
                                               const KnownEdges& known,
                                               PathCache* cache = nullptr) {
    if (Z.size() != E.size())
        throw ValidationError("instrument list and edge set must have equal size");
    for (std::size_t z : Z)
        if (!detail::instrument_separated(g, z, E.head, E, known, {})) return std::nullopt;
    return detail::assemble(g, E, Z, known, {}, Method::aux_is, cache);
}

/// Def. 4: the knowledge-free special case.
inline std::optional<Certificate> check_simple_is(const MixedGraph& g,
                                                  std::span<const std::size_t> Z,
                                                  const EdgeSet& E, PathCache* cache = nullptr) {
    return check_aux_is(g, Z, E, {}, cache);
}

/**
 * Quasi-instrument test: like check_aux_is but externally known edges into
 * the head (outside E) are deleted too, and recorded as a head-side
 * subtraction y* = y - sum(lambda x).
 */
inline std::optional<Certificate> check_quasi(const MixedGraph& g,
                                              std::span<const std::size_t> Z, const EdgeSet& E,
                                              const KnownEdges& known,
                                              PathCache* cache = nullptr) {
    if (Z.size() != E.size())
        throw ValidationError("instrument list and edge set must have equal size");
    for (std::size_t e : E.edges)
        if (known.count(e))
            throw ValidationError("edge set overlaps the known head-side edges: " +
                                  g.edge_name(e));
    std::vector<std::size_t> head_sub = known_incident(g, known, E.head);
    for (std::size_t z : Z)
        if (!detail::instrument_separated(g, z, E.head, E, known, head_sub))
            return std::nullopt;
    Method base = head_sub.empty() ? Method::aux_is : Method::quasi;
    return detail::assemble(g, E, Z, known, std::move(head_sub), base, cache);
}

namespace detail {

template <typename TrySubset>
bool for_each_subset(std::span<const std::size_t> pool, std::size_t k, TrySubset&& fn) {
    if (k > pool.size()) return false;
    std::vector<std::size_t> pick(k);
    std::function<bool(std::size_t, std::size_t)> rec = [&](std::size_t start,
                                                            std::size_t depth) -> bool {
        if (depth == k) return fn(std::span<const std::size_t>(pick));
        for (std::size_t i = start; i + (k - depth) <= pool.size(); ++i) {
            pick[depth] = pool[i];
            if (rec(i + 1, depth + 1)) return true;
        }
        return false;
    };
    return rec(0, 0);
}

}  // namespace detail

/**
 * First certificate for E in deterministic order: instrument candidates by
 * node index, subsets lexicographically. Throws BudgetError when the head
 * or candidate pool exceeds the budget; nullopt means exhausted.
 */
inline std::optional<Certificate> find_certificate(const MixedGraph& g, const EdgeSet& E,
                                                   const KnownEdges& known,
                                                   const SearchBudget& budget = {},
                                                   PathCache* cache = nullptr) {
    if (E.size() > budget.max_edge_set)
        throw BudgetError("edge set at head " + g.name(E.head) + " exceeds budget");
    if (g.node_count() - 1 > budget.max_pool)
        throw BudgetError("instrument candidate pool exceeds budget");

    std::vector<std::size_t> qualified;
    for (std::size_t z = 0; z < g.node_count(); ++z) {
        if (z == E.head) continue;
        if (detail::instrument_separated(g, z, E.head, E, known, {})) qualified.push_back(z);
    }
    std::optional<Certificate> found;
    detail::for_each_subset(qualified, E.size(), [&](std::span<const std::size_t> Z) {
        auto cert = detail::assemble(g, E, Z, known, {}, Method::aux_is, cache);
        if (cert) found = std::move(cert);
        return found.has_value();
    });
    return found;
}

namespace detail {

// edges into z that head every unblocked z-y path in G_E; nullopt when some
// path cannot be cancelled by subtracting into z (z is not allowed)
inline std::optional<std::vector<std::size_t>> ghtc_needed_edges(const MixedGraph& g,
                                                                 std::size_t z, std::size_t y,
                                                                 const EdgeMask& mask_E,
                                                                 std::size_t cap) {
    if (z == y) return std::nullopt;
    std::vector<Path> paths = enumerate_unblocked_paths(g, z, y, {}, cap, &mask_E);
    std::set<std::size_t> needed;
    for (const auto& p : paths) {
        const PathStep& s0 = p.steps.front();
        if (s0.kind != StepKind::against) return std::nullopt;
        needed.insert(s0.edge);
    }
    return std::vector<std::size_t>(needed.begin(), needed.end());
}

}  // namespace detail

/**
 * General half-trek criterion (Def. 8) with the allowed-node rule: each
 * instrument's blocking edges E_zy must already be identified; they become
 * the certificate's subtractions.
 */
inline std::optional<Certificate> ghtc_admissible(const MixedGraph& g,
                                                  std::span<const std::size_t> Z,
                                                  const EdgeSet& E,
                                                  const std::set<std::size_t>& identified,
                                                  PathCache* cache = nullptr,
                                                  std::size_t path_cap = 100000) {
    if (Z.size() != E.size())
        throw ValidationError("instrument list and edge set must have equal size");
    std::size_t y = E.head;

    std::set<std::size_t> forbidden{y};
    for (std::size_t s : g.siblings(y)) forbidden.insert(s);
    for (std::size_t z : Z)
        if (forbidden.count(z)) return std::nullopt;

    // condition (iv): no half-trek from Z may reach a retained parent of y
    std::set<std::size_t> pa_rest;
    for (std::size_t e : g.incident_edges(y))
        if (!std::binary_search(E.edges.begin(), E.edges.end(), e))
            pa_rest.insert(g.directed()[e].tail);
    for (std::size_t z : Z) {
        if (pa_rest.count(z)) return std::nullopt;
        for (std::size_t w : half_trek_reachable(g, z))
            if (pa_rest.count(w)) return std::nullopt;
    }

    EdgeMask mask_E = make_edge_mask(g, E.edges);
    std::map<std::size_t, std::vector<std::size_t>> needed_by_z;
    for (std::size_t z : Z) {
        auto needed = detail::ghtc_needed_edges(g, z, y, mask_E, path_cap);
        if (!needed) return std::nullopt;
        for (std::size_t e : *needed)
            if (!identified.count(e)) return std::nullopt;
        needed_by_z[z] = std::move(*needed);
    }

    auto ms = find_path_system_impl(g, Z, E.tails(g), PathKind::half_trek,
                                    /*paired=*/false, cache);
    if (!ms) return std::nullopt;
    Certificate cert;
    cert.target = E;
    cert.instruments = ms->sources;
    cert.witness = std::move(ms->system);
    for (std::size_t z : cert.instruments) cert.subtracted.push_back(needed_by_z[z]);
    cert.method = Method::ghtc;
    return cert;
}

namespace detail {

// one head-local round pass shared by the fixpoints; returns certificates in
// deterministic order for edge sets containing at least one target edge
template <typename SearchEdgeSet>
void head_round(const MixedGraph& g, std::size_t y, const std::set<std::size_t>& targets,
                std::vector<Certificate>& out, SearchEdgeSet&& search) {
    const auto& inc = g.incident_edges(y);
    std::set<std::size_t> remaining;
    for (std::size_t e : inc)
        if (targets.count(e)) remaining.insert(e);
    if (remaining.empty()) return;

    for (std::size_t size = 1; size <= inc.size() && !remaining.empty(); ++size) {
        for_each_subset(inc, size, [&](std::span<const std::size_t> edges) {
            bool hits = false;
            for (std::size_t e : edges)
                if (remaining.count(e)) hits = true;
            if (!hits) return false;
            EdgeSet E = EdgeSet::of(g, {edges.begin(), edges.end()});
            if (auto cert = search(E)) {
                for (std::size_t e : E.edges) remaining.erase(e);
                out.push_back(std::move(*cert));
            }
            return remaining.empty();
        });
    }
}

}  // namespace detail

/**
 * Def. 7 bootstrapping: rounds of instrumental-set identification feeding
 * identified coefficients forward as auxiliary knowledge. Checks within a
 * round use the round-start snapshot; heads are processed in node order;
 * singleton targets precede joint sets. `use_knowledge=false` degrades the
 * criterion to plain simple-IS rounds (no subtraction anywhere).
 */
inline IdentificationResult aux_is_fixpoint(const MixedGraph& g, const KnownEdges& external,
                                            const SearchBudget& budget = {},
                                            bool use_knowledge = true) {
    IdentificationResult result;
    KnownEdges known = external;
    for (const auto& [e, info] : external) result.external.push_back(e);

    PathCache cache;
    std::set<std::size_t> wanted;
    for (std::size_t e = 0; e < g.directed().size(); ++e)
        if (!known.count(e)) wanted.insert(e);
    std::set<std::size_t> noted_heads;

    while (true) {
        ++result.rounds;
        KnownEdges snapshot = known;
        std::vector<Certificate> certs;
        for (std::size_t y = 0; y < g.node_count(); ++y) {
            if (g.incident_edges(y).empty()) continue;
            try {
                detail::head_round(g, y, wanted, certs, [&](const EdgeSet& E) {
                    return find_certificate(g, E, use_knowledge ? snapshot : KnownEdges{},
                                            budget, &cache);
                });
            } catch (const BudgetError& err) {
                if (noted_heads.insert(y).second) result.budget_notes.push_back(err.what());
            }
        }
        if (certs.empty()) break;
        for (auto& cert : certs) {
            for (std::size_t e : cert.target.edges) {
                if (!known.count(e)) {
                    known[e] = {KnownCoefficient::Source::identified,
                                std::numeric_limits<double>::quiet_NaN(),
                                int(result.identified.size())};
                    wanted.erase(e);
                }
            }
            result.identified.push_back({std::move(cert), result.rounds});
        }
        if (wanted.empty()) break;
    }
    result.unidentified.assign(wanted.begin(), wanted.end());
    return result;
}

/// Lemma-3-style iteration of g-HT admissible sets.
inline IdentificationResult ghtc_fixpoint(const MixedGraph& g, const SearchBudget& budget = {}) {
    IdentificationResult result;
    PathCache cache;
    std::set<std::size_t> identified;
    std::set<std::size_t> wanted;
    for (std::size_t e = 0; e < g.directed().size(); ++e) wanted.insert(e);
    std::set<std::size_t> noted_heads;

    auto search = [&](const EdgeSet& E,
                      const std::set<std::size_t>& snapshot) -> std::optional<Certificate> {
        if (E.size() > budget.max_edge_set)
            throw BudgetError("edge set at head " + g.name(E.head) + " exceeds budget");
        if (g.node_count() - 1 > budget.max_pool)
            throw BudgetError("instrument candidate pool exceeds budget");
        std::vector<std::size_t> pool;
        std::set<std::size_t> forbidden{E.head};
        for (std::size_t s : g.siblings(E.head)) forbidden.insert(s);
        for (std::size_t z = 0; z < g.node_count(); ++z)
            if (!forbidden.count(z)) pool.push_back(z);
        std::optional<Certificate> found;
        detail::for_each_subset(pool, E.size(), [&](std::span<const std::size_t> Z) {
            auto cert = ghtc_admissible(g, Z, E, snapshot, &cache, budget.path_cap);
            if (cert) found = std::move(cert);
            return found.has_value();
        });
        return found;
    };

    while (true) {
        ++result.rounds;
        std::set<std::size_t> snapshot = identified;
        std::vector<Certificate> certs;
        for (std::size_t y = 0; y < g.node_count(); ++y) {
            if (g.incident_edges(y).empty()) continue;
            try {
                detail::head_round(g, y, wanted, certs,
                                   [&](const EdgeSet& E) { return search(E, snapshot); });
            } catch (const BudgetError& err) {
                if (noted_heads.insert(y).second) result.budget_notes.push_back(err.what());
            }
        }
        if (certs.empty()) break;
        for (auto& cert : certs) {
            for (std::size_t e : cert.target.edges) {
                identified.insert(e);
                wanted.erase(e);
            }
            result.identified.push_back({std::move(cert), result.rounds});
        }
        if (wanted.empty()) break;
    }
    result.unidentified.assign(wanted.begin(), wanted.end());
    return result;
}

struct MethodComparison {
    struct Row {
        std::size_t edge;
        int simple_round = -1;  // -1 = not identified
        int aux_round = -1;
        int ghtc_round = -1;
    };
    std::vector<Row> rows;
    IdentificationResult simple, aux, ghtc;
};

/**
 * Per-edge verdicts of the three fixpoints. Throws if some edge is g-HTC
 * identified but not aux-IS identified, which Thm. 2 rules out.
 */
inline MethodComparison compare_methods(const MixedGraph& g, const SearchBudget& budget = {}) {
    MethodComparison cmp;
    cmp.simple = aux_is_fixpoint(g, {}, budget, /*use_knowledge=*/false);
    cmp.aux = aux_is_fixpoint(g, {}, budget, /*use_knowledge=*/true);
    cmp.ghtc = ghtc_fixpoint(g, budget);

    auto round_of = [&](const IdentificationResult& r, std::size_t e) {
        for (const auto& d : r.identified)
            for (std::size_t te : d.certificate.target.edges)
                if (te == e) return d.round;
        return -1;
    };
    for (std::size_t e = 0; e < g.directed().size(); ++e) {
        MethodComparison::Row row;
        row.edge = e;
        row.simple_round = round_of(cmp.simple, e);
        row.aux_round = round_of(cmp.aux, e);
        row.ghtc_round = round_of(cmp.ghtc, e);
        if (row.ghtc_round >= 0 && row.aux_round < 0)
            throw std::logic_error("subsumption violation: edge " + g.edge_name(e) +
                                   " is g-HTC identified but not aux-IS identified");
        cmp.rows.push_back(row);
    }
    return cmp;
}

}  // namespace semid
