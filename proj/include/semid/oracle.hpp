#pragma once

#include <random>

#include "identify.hpp"

namespace semid {

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NearSingularError : NumericError {
    double condition;
    explicit NearSingularError(double cond)
        : NumericError("instrument system is near-singular (condition " +
                       std::to_string(cond) + ")"),
          condition(cond) {}
};

/// Concrete parameter values for a graph: lambda(i,j) is the coefficient of
/// edge i->j, omega the error covariance (diagonal variances, off-diagonal
/// entries only on bidirected pairs).
struct ModelInstance {
    MixedGraph graph;
    Eigen::MatrixXd lambda;
    Eigen::MatrixXd omega;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = seed;
    splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (a + 1);
    splitmix64(s);
    s ^= 0xc2b2ae3d27d4eb4fULL * (b + 1);
    return splitmix64(s);
}

// all draws go through one fully specified engine + mapping, so instances
// are reproducible across platforms
struct Draw {
    std::mt19937_64 eng;
    explicit Draw(std::uint64_t seed) : eng(seed) {}
    double unit() { return std::ldexp(double(eng() >> 11), -53); }
    double magnitude(double lo, double hi) { return lo + (hi - lo) * unit(); }
    double signed_magnitude(double lo, double hi) {
        double m = magnitude(lo, hi);
        return (eng() & 1) ? m : -m;
    }
};

}  // namespace detail

/**
 * Seeded random parameterization: coefficients uniform on +-[0.5, 1.5],
 * unit error variances, error covariances +-[0.1, 0.4]; omega is made
 * safely positive definite by diagonal loading eps = max(0, 0.05 - eigmin).
 */
inline ModelInstance random_instance(const MixedGraph& g, std::uint64_t seed) {
    std::size_t n = g.node_count();
    detail::Draw draw(seed);
    ModelInstance m{g, Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Identity(n, n)};
    for (const auto& e : g.directed())
        m.lambda(Eigen::Index(e.tail), Eigen::Index(e.head)) = draw.signed_magnitude(0.5, 1.5);
    for (const auto& e : g.bidirected()) {
        double v = draw.signed_magnitude(0.1, 0.4);
        m.omega(Eigen::Index(e.a), Eigen::Index(e.b)) = v;
        m.omega(Eigen::Index(e.b), Eigen::Index(e.a)) = v;
    }
    if (!g.bidirected().empty()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.omega,
                                                          Eigen::EigenvaluesOnly);
        double eps = std::max(0.0, -es.eigenvalues().minCoeff() + 0.05);
        if (eps > 0.0) m.omega.diagonal().array() += eps;
    }
    return m;
}

/// Sigma implied by (lambda, omega) via unit-triangular solves in
/// topological order.
inline Eigen::MatrixXd implied_covariance_from(const MixedGraph& g,
                                               const Eigen::MatrixXd& lambda,
                                               const Eigen::MatrixXd& omega) {
    std::size_t n = g.node_count();
    const auto& topo = g.topological_order();
    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd Op(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            if (r != c) B(r, c) = -lambda(Eigen::Index(topo[c]), Eigen::Index(topo[r]));
            Op(r, c) = omega(Eigen::Index(topo[r]), Eigen::Index(topo[c]));
        }
    // B is unit lower triangular in topological positions
    Eigen::MatrixXd T = B.triangularView<Eigen::Lower>().solve(Op);
    Eigen::MatrixXd Sp = B.triangularView<Eigen::Lower>().solve(T.transpose());
    if (!Sp.allFinite()) throw NumericError("implied covariance is not finite");
    Eigen::MatrixXd sigma(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            sigma(Eigen::Index(topo[r]), Eigen::Index(topo[c])) = Sp(r, c);
    return 0.5 * (sigma + sigma.transpose());
}

inline Eigen::MatrixXd implied_covariance(const ModelInstance& m) {
    return implied_covariance_from(m.graph, m.lambda, m.omega);
}

/// Rescales every variable to unit implied variance; coefficients map as
/// lambda_ij * sigma_i / sigma_j, omega entries as omega_ij / (sigma_i sigma_j).
inline ModelInstance standardize(const ModelInstance& m) {
    Eigen::MatrixXd sigma = implied_covariance(m);
    std::size_t n = m.graph.node_count();
    Eigen::VectorXd d(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = sigma(Eigen::Index(i), Eigen::Index(i));
        if (!(v > 1e-12)) throw NumericError("zero implied variance at node " + m.graph.name(i));
        d(Eigen::Index(i)) = std::sqrt(v);
    }
    ModelInstance out{m.graph, m.lambda, m.omega};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            out.lambda(i, j) = m.lambda(i, j) * d(Eigen::Index(i)) / d(Eigen::Index(j));
            out.omega(i, j) = m.omega(i, j) / (d(Eigen::Index(i)) * d(Eigen::Index(j)));
        }
    return out;
}

struct SolveOutcome {
    std::map<std::size_t, double> values;  // edge index -> estimate
    double condition = 0.0;
};

/**
 * Executes a certificate against a covariance matrix: A_ij = sigma*(z_i, x_j),
 * b_i = sigma*(z_i, y*) with the certificate's instrument- and head-side
 * subtractions expanded bilinearly. Near-singular systems (condition > 1e8)
 * signal non-generic parameters via NearSingularError.
 */
inline SolveOutcome solve_certificate(const MixedGraph& g, const Eigen::MatrixXd& sigma,
                                      const Certificate& cert,
                                      const std::map<std::size_t, double>& values) {
    std::size_t k = cert.target.size();
    std::vector<std::size_t> tails = cert.target.tails(g);
    auto head_exp = aux_expansion(g, cert.target.head, cert.head_subtracted, values);
    Eigen::MatrixXd A(k, k);
    Eigen::VectorXd b(k);
    for (std::size_t i = 0; i < k; ++i) {
        auto zi = aux_expansion(g, cert.instruments[i], cert.subtracted[i], values);
        for (std::size_t j = 0; j < k; ++j) {
            auto xj = aux_expansion(g, tails[j], {}, values);
            A(Eigen::Index(i), Eigen::Index(j)) = detail::bilinear_cov(sigma, zi, xj);
        }
        b(Eigen::Index(i)) = detail::bilinear_cov(sigma, zi, head_exp);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(Eigen::Index(k) - 1);
    double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(cond <= 1e8)) throw NearSingularError(cond);
    Eigen::VectorXd x = svd.solve(b);
    SolveOutcome out;
    out.condition = cond;
    for (std::size_t j = 0; j < k; ++j) out.values[cert.target.edges[j]] = x(Eigen::Index(j));
    return out;
}

struct VerificationReport {
    int trials = 0;
    double tol = 0.0;
    bool pass = true;
    std::map<std::size_t, double> max_abs_error;  // derived edges only
    int resampled_trials = 0;
};

/**
 * Soundness harness: per trial, instantiate the graph at random, walk the
 * certificates in derivation order feeding recovered values forward
 * (externally known edges take their instance-true values), and compare
 * against the generating coefficients.
 */
inline VerificationReport verify_identification(const MixedGraph& g,
                                                const IdentificationResult& result,
                                                const KnownEdges& external, int trials,
                                                double tol, std::uint64_t seed) {
    if (trials < 1) throw ValidationError("trials must be >= 1");
    VerificationReport report;
    report.trials = trials;
    report.tol = tol;
    std::set<std::size_t> external_edges;
    for (const auto& [e, info] : external) external_edges.insert(e);

    for (int t = 0; t < trials; ++t) {
        bool done = false;
        for (int attempt = 0; attempt < 10 && !done; ++attempt) {
            if (attempt > 0 && attempt == 1) ++report.resampled_trials;
            ModelInstance inst =
                random_instance(g, detail::derive_seed(seed, std::uint64_t(t), attempt));
            Eigen::MatrixXd sigma = implied_covariance(inst);
            std::map<std::size_t, double> values;
            for (std::size_t e : external_edges) {
                const auto& de = g.directed()[e];
                values[e] = inst.lambda(Eigen::Index(de.tail), Eigen::Index(de.head));
            }
            std::map<std::size_t, double> errors;
            try {
                for (const auto& entry : result.identified) {
                    SolveOutcome sol = solve_certificate(g, sigma, entry.certificate, values);
                    for (const auto& [e, est] : sol.values) {
                        const auto& de = g.directed()[e];
                        double truth = inst.lambda(Eigen::Index(de.tail), Eigen::Index(de.head));
                        if (!external_edges.count(e)) {
                            double err = std::abs(est - truth);
                            auto it = errors.find(e);
                            if (it == errors.end() || it->second < err) errors[e] = err;
                        }
                        if (!values.count(e)) values[e] = est;
                    }
                }
            } catch (const NearSingularError&) {
                continue;  // resample this trial
            }
            for (const auto& [e, err] : errors) {
                auto it = report.max_abs_error.find(e);
                if (it == report.max_abs_error.end() || it->second < err)
                    report.max_abs_error[e] = err;
            }
            done = true;
        }
        if (!done) throw NumericError("trial " + std::to_string(t) +
                                      " stayed near-singular after 10 resamples");
    }
    for (const auto& [e, err] : report.max_abs_error)
        if (!(err <= tol)) report.pass = false;
    return report;
}

// ---- covariance CSV I/O ----------------------------------------------

struct NamedCovariance {
    std::vector<std::string> names;
    Eigen::MatrixXd sigma;
};

inline std::string write_cov_csv(const NamedCovariance& cov) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < cov.names.size(); ++i)
        os << (i ? "," : "") << cov.names[i];
    os << "\n";
    for (Eigen::Index r = 0; r < cov.sigma.rows(); ++r) {
        for (Eigen::Index c = 0; c < cov.sigma.cols(); ++c)
            os << (c ? "," : "") << cov.sigma(r, c);
        os << "\n";
    }
    return os.str();
}

inline NamedCovariance read_cov_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            std::string cell(line.substr(start, comma == std::string_view::npos
                                                    ? line.size() - start
                                                    : comma - start));
            while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t'))
                cell.erase(cell.begin());
            while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.pop_back();
            cells.push_back(std::move(cell));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    if (rows.size() < 2) throw ValidationError("covariance CSV needs a header and a body");
    NamedCovariance out;
    out.names = rows.front();
    std::size_t n = out.names.size();
    if (rows.size() != n + 1) throw ValidationError("covariance CSV body must be square");
    out.sigma.resize(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t r = 0; r < n; ++r) {
        if (rows[r + 1].size() != n) throw ValidationError("covariance CSV row length mismatch");
        for (std::size_t c = 0; c < n; ++c) {
            try {
                out.sigma(Eigen::Index(r), Eigen::Index(c)) = std::stod(rows[r + 1][c]);
            } catch (const std::exception&) {
                throw ValidationError("invalid number in covariance CSV: " + rows[r + 1][c]);
            }
        }
    }
    return out;
}

/// Permutes a named covariance to graph node order; the name sets must match.
inline Eigen::MatrixXd align_covariance(const NamedCovariance& cov, const MixedGraph& g) {
    std::size_t n = g.node_count();
    if (cov.names.size() != n)
        throw ValidationError("covariance matrix has " + std::to_string(cov.names.size()) +
                              " variables, graph has " + std::to_string(n));
    double scale = std::max(1.0, cov.sigma.cwiseAbs().maxCoeff());
    if ((cov.sigma - cov.sigma.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw ValidationError("covariance matrix is not symmetric");
    std::vector<std::size_t> where(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto v = g.find_node(cov.names[i]);
        if (!v) throw ValidationError("covariance variable not in graph: " + cov.names[i]);
        where[i] = *v;
    }
    Eigen::MatrixXd sigma(n, n);
    sigma.setConstant(std::numeric_limits<double>::quiet_NaN());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            sigma(Eigen::Index(where[r]), Eigen::Index(where[c])) = cov.sigma(r, c);
    if (!sigma.allFinite()) throw ValidationError("covariance CSV misses some graph variable");
    return 0.5 * (sigma + sigma.transpose());
}

/// Smallest eigenvalue, for positive-definiteness checks.
inline double min_eigenvalue(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace semid
