#pragma once

#include <fstream>
#include <iomanip>
#include <iostream>

#include "json_io.hpp"

namespace semid {

struct RunConfig {
    std::string graph_path;
    std::optional<std::string> known_path;
    std::optional<std::string> cov_path;
    std::uint64_t seed = 42;
    int trials = 100;
    double tol = 1e-6;
    bool json = false;
    bool compare = false;
    bool external_only = false;  // constraints: ignore internally identified coefficients
};

namespace detail {

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Inputs {
    MixedGraph graph;
    KnownEdges known;
    std::optional<Eigen::MatrixXd> sigma;
};

inline Inputs load_inputs(const RunConfig& cfg) {
    Inputs in;
    in.graph = MixedGraph::parse(slurp(cfg.graph_path));
    if (cfg.known_path) in.known = parse_known(slurp(*cfg.known_path), in.graph);
    if (cfg.cov_path) in.sigma = align_covariance(read_cov_csv(slurp(*cfg.cov_path)), in.graph);
    return in;
}

inline std::string describe(const MixedGraph& g, const Certificate& cert) {
    std::ostringstream line;
    line << method_name(cert.method) << "  ";
    for (std::size_t i = 0; i < cert.target.edges.size(); ++i)
        line << (i ? ", " : "") << g.edge_name(cert.target.edges[i]) << " ["
             << g.directed()[cert.target.edges[i]].label << "]";
    line << "  instruments (";
    for (std::size_t i = 0; i < cert.instruments.size(); ++i)
        line << (i ? ", " : "") << g.name(cert.instruments[i]);
    line << ")";
    bool any = false;
    for (const auto& s : cert.subtracted) any = any || !s.empty();
    if (any) {
        line << "  subtract {";
        bool first = true;
        for (std::size_t i = 0; i < cert.instruments.size(); ++i)
            for (std::size_t e : cert.subtracted[i]) {
                line << (first ? "" : ", ") << g.name(cert.instruments[i]) << ": "
                     << g.directed()[e].label;
                first = false;
            }
        line << "}";
    }
    if (!cert.head_subtracted.empty()) {
        line << "  head-subtract {";
        for (std::size_t i = 0; i < cert.head_subtracted.size(); ++i)
            line << (i ? ", " : "") << g.directed()[cert.head_subtracted[i]].label;
        line << "}";
    }
    return line.str();
}

inline void print_result(const MixedGraph& g, const IdentificationResult& res,
                         std::ostream& out) {
    for (const auto& d : res.identified)
        out << "round " << d.round << ": " << describe(g, d.certificate) << "\n";
    if (!res.external.empty()) {
        out << "externally known:";
        for (std::size_t e : res.external) out << " " << g.edge_name(e);
        out << "\n";
    }
    if (!res.unidentified.empty()) {
        out << "unidentified:";
        for (std::size_t e : res.unidentified) out << " " << g.edge_name(e);
        out << "\n";
    }
    for (const auto& n : res.budget_notes) out << "budget: " << n << "\n";
    std::size_t total = g.directed().size();
    out << "identified " << (total - res.unidentified.size() - res.external.size()) << "/"
        << total << " edges (" << res.external.size() << " external) in " << res.rounds
        << " round(s)\n";
}

inline ojson comparison_json(const MixedGraph& g, const MethodComparison& cmp) {
    ojson rows = ojson::array();
    for (const auto& r : cmp.rows)
        rows.push_back({{"edge", g.edge_name(r.edge)},
                        {"simpleIS", r.simple_round},
                        {"auxIS", r.aux_round},
                        {"gHTC", r.ghtc_round}});
    return rows;
}

inline void print_comparison(const MixedGraph& g, const MethodComparison& cmp,
                             std::ostream& out) {
    out << "edge                 simpleIS   auxIS   gHTC   (round, - = not identified)\n";
    for (const auto& r : cmp.rows) {
        std::ostringstream name;
        name << g.edge_name(r.edge) << " [" << g.directed()[r.edge].label << "]";
        out << std::left << std::setw(22) << name.str() << std::right;
        auto cell = [&](int round) {
            if (round < 0)
                out << std::setw(7) << "-";
            else
                out << std::setw(7) << round;
        };
        cell(r.simple_round);
        cell(r.aux_round);
        cell(r.ghtc_round);
        out << "\n";
    }
}

// identified values resolved from a covariance matrix by walking the
// derivation order; externally known values come from the caller
inline std::map<std::size_t, double> resolve_values(const MixedGraph& g,
                                                    const Eigen::MatrixXd& sigma,
                                                    const IdentificationResult& res,
                                                    const KnownEdges& external,
                                                    std::map<std::size_t, double>* conditions) {
    std::map<std::size_t, double> values;
    for (const auto& [e, info] : external) {
        if (!info.has_value())
            throw ValidationError("externally known edge lacks a numeric value: " +
                                  g.edge_name(e));
        values[e] = info.value;
    }
    for (const auto& d : res.identified) {
        SolveOutcome sol = solve_certificate(g, sigma, d.certificate, values);
        for (const auto& [e, v] : sol.values) {
            values.emplace(e, v);
            if (conditions) (*conditions)[e] = sol.condition;
        }
    }
    return values;
}

}  // namespace detail

inline int cmd_identify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        detail::Inputs in = detail::load_inputs(cfg);
        IdentificationResult res = aux_is_fixpoint(in.graph, in.known);
        std::optional<MethodComparison> cmp;
        if (cfg.compare) cmp = compare_methods(in.graph);
        if (cfg.json) {
            ojson doc{{"command", "identify"}, {"result", to_json(in.graph, res)}};
            if (cmp) doc["comparison"] = detail::comparison_json(in.graph, *cmp);
            out << doc.dump(2) << "\n";
        } else {
            detail::print_result(in.graph, res, out);
            if (cmp) detail::print_comparison(in.graph, *cmp, out);
        }
        return res.all_identified() ? 0 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        detail::Inputs in = detail::load_inputs(cfg);
        IdentificationResult res = aux_is_fixpoint(in.graph, in.known);
        VerificationReport rep =
            verify_identification(in.graph, res, in.known, cfg.trials, cfg.tol, cfg.seed);
        if (cfg.json) {
            ojson errors = ojson::object();
            for (const auto& [e, v] : rep.max_abs_error) errors[in.graph.edge_name(e)] = v;
            out << ojson{{"command", "verify"},
                         {"trials", rep.trials},
                         {"tol", rep.tol},
                         {"pass", rep.pass},
                         {"max_abs_error", errors},
                         {"resampled_trials", rep.resampled_trials}}
                       .dump(2)
                << "\n";
        } else {
            if (rep.max_abs_error.empty())
                out << "warning: no certificates to verify (vacuous pass)\n";
            out << std::scientific << std::setprecision(3);
            for (const auto& [e, v] : rep.max_abs_error)
                out << in.graph.edge_name(e) << "  max |error| = " << v << "\n";
            out << (rep.pass ? "PASS" : "FAIL") << " (" << rep.trials << " trials, tol "
                << rep.tol << ", " << rep.resampled_trials << " resampled)\n";
        }
        return rep.pass ? 0 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_constraints(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        detail::Inputs in = detail::load_inputs(cfg);
        KnownEdges knowledge = in.known;
        IdentificationResult res;
        if (!cfg.external_only) {
            res = aux_is_fixpoint(in.graph, in.known);
            for (const auto& d : res.identified)
                for (std::size_t e : d.certificate.target.edges)
                    knowledge.emplace(e, KnownCoefficient{KnownCoefficient::Source::identified,
                                                          std::numeric_limits<double>::quiet_NaN(),
                                                          0});
        }
        std::vector<Constraint> cons = derive_constraints(in.graph, knowledge);
        std::vector<double> residuals;
        if (in.sigma) {
            auto values = detail::resolve_values(in.graph, *in.sigma, res, in.known, nullptr);
            residuals = evaluate_constraints(in.graph, *in.sigma, cons, values);
        }
        bool pass = true;
        for (double r : residuals) pass = pass && r <= cfg.tol;
        if (cfg.json) {
            ojson list = ojson::array();
            for (std::size_t i = 0; i < cons.size(); ++i) {
                ojson c = to_json(in.graph, cons[i]);
                if (in.sigma) {
                    c["residual"] = residuals[i];
                    c["pass"] = residuals[i] <= cfg.tol;
                }
                list.push_back(std::move(c));
            }
            out << ojson{{"command", "constraints"}, {"constraints", list}}.dump(2) << "\n";
        } else {
            if (cons.empty()) out << "no constraints\n";
            out << std::scientific << std::setprecision(3);
            for (std::size_t i = 0; i < cons.size(); ++i) {
                out << kind_name(cons[i].kind) << ": " << cons[i].formula;
                if (in.sigma)
                    out << "  residual = " << residuals[i]
                        << (residuals[i] <= cfg.tol ? "  ok" : "  VIOLATED");
                out << "\n";
            }
        }
        return in.sigma && !pass ? 2 : 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        detail::Inputs in = detail::load_inputs(cfg);
        if (!in.sigma) throw ValidationError("estimate requires --cov");
        double scale = std::max(1.0, in.sigma->cwiseAbs().maxCoeff());
        if (min_eigenvalue(*in.sigma) < -1e-8 * scale)
            throw ValidationError("covariance matrix is not positive semidefinite");
        IdentificationResult res = aux_is_fixpoint(in.graph, in.known);
        std::map<std::size_t, double> conditions;
        auto values = detail::resolve_values(in.graph, *in.sigma, res, in.known, &conditions);
        if (cfg.json) {
            ojson estimates = ojson::object();
            for (const auto& [e, v] : values) {
                std::string name = in.graph.edge_name(e);
                bool external = in.known.count(e) != 0;
                ojson entry{{"value", v}, {"source", external ? "external" : "identified"}};
                if (!external) entry["condition"] = conditions[e];
                estimates[name] = std::move(entry);
            }
            ojson unidentified = ojson::array();
            for (std::size_t e : res.unidentified) unidentified.push_back(in.graph.edge_name(e));
            out << ojson{{"command", "estimate"},
                         {"estimates", estimates},
                         {"unidentified", unidentified}}
                       .dump(2)
                << "\n";
        } else {
            out << std::setprecision(12);
            for (const auto& [e, v] : values) {
                out << in.graph.edge_name(e) << " [" << in.graph.directed()[e].label
                    << "] = " << v;
                if (in.known.count(e))
                    out << "  (external)";
                else
                    out << "  (condition " << std::setprecision(3) << conditions[e]
                        << std::setprecision(12) << ")";
                out << "\n";
            }
            for (std::size_t e : res.unidentified)
                out << in.graph.edge_name(e) << " unidentified\n";
        }
        return res.all_identified() ? 0 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        detail::Inputs in = detail::load_inputs(cfg);
        MethodComparison cmp = compare_methods(in.graph);
        if (cfg.json)
            out << ojson{{"command", "compare"},
                         {"rows", detail::comparison_json(in.graph, cmp)}}
                       .dump(2)
                << "\n";
        else
            detail::print_comparison(in.graph, cmp, out);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace semid
