#pragma once

#include <cctype>

#include "augment.hpp"

namespace semid {

using SymbolAssignment = std::map<std::string, double>;

/// One unblocked path's contribution: integer factor times a product of
/// edge symbols (repeated symbols = powers).
struct Monomial {
    long long coeff = 0;
    std::vector<std::string> symbols;  // sorted
};

namespace detail {

// degree first, then case-insensitive symbol order; stable golden strings
inline bool monomial_less(const Monomial& a, const Monomial& b) {
    if (a.symbols.size() != b.symbols.size()) return a.symbols.size() < b.symbols.size();
    for (std::size_t i = 0; i < a.symbols.size(); ++i) {
        const std::string &x = a.symbols[i], &y = b.symbols[i];
        for (std::size_t j = 0; j < std::min(x.size(), y.size()); ++j) {
            int cx = std::tolower(static_cast<unsigned char>(x[j]));
            int cy = std::tolower(static_cast<unsigned char>(y[j]));
            if (cx != cy) return cx < cy;
        }
        if (x.size() != y.size()) return x.size() < y.size();
        if (x != y) return x < y;
    }
    return a.coeff < b.coeff;
}

}  // namespace detail

/// Sum of path monomials in canonical order (duplicates retained until
/// cancel() combines them).
class CovExpr {
  public:
    CovExpr() = default;
    explicit CovExpr(std::vector<Monomial> monomials) : monomials_(std::move(monomials)) {
        normalize();
    }

    const std::vector<Monomial>& monomials() const { return monomials_; }
    bool empty() const { return monomials_.empty(); }
    std::size_t size() const { return monomials_.size(); }

    CovExpr scaled(long long factor) const {
        std::vector<Monomial> out = monomials_;
        for (auto& m : out) m.coeff *= factor;
        return CovExpr(std::move(out));
    }

    CovExpr times_symbol(const std::string& symbol) const {
        std::vector<Monomial> out = monomials_;
        for (auto& m : out) {
            m.symbols.push_back(symbol);
            std::sort(m.symbols.begin(), m.symbols.end());
        }
        return CovExpr(std::move(out));
    }

    friend CovExpr operator+(const CovExpr& a, const CovExpr& b) {
        std::vector<Monomial> out = a.monomials_;
        out.insert(out.end(), b.monomials_.begin(), b.monomials_.end());
        return CovExpr(std::move(out));
    }
    friend CovExpr operator-(const CovExpr& a, const CovExpr& b) { return a + b.scaled(-1); }

    friend bool operator==(const CovExpr& a, const CovExpr& b) {
        if (a.monomials_.size() != b.monomials_.size()) return false;
        for (std::size_t i = 0; i < a.monomials_.size(); ++i)
            if (a.monomials_[i].coeff != b.monomials_[i].coeff ||
                a.monomials_[i].symbols != b.monomials_[i].symbols)
                return false;
        return true;
    }

  private:
    void normalize() {
        for (auto& m : monomials_) std::sort(m.symbols.begin(), m.symbols.end());
        std::stable_sort(monomials_.begin(), monomials_.end(), detail::monomial_less);
        monomials_.erase(std::remove_if(monomials_.begin(), monomials_.end(),
                                        [](const Monomial& m) { return m.coeff == 0; }),
                         monomials_.end());
    }

    std::vector<Monomial> monomials_;
};

/// Combines monomials with identical symbol multisets; idempotent.
inline CovExpr cancel(const CovExpr& expr) {
    std::vector<Monomial> out;
    for (const auto& m : expr.monomials()) {
        if (!out.empty() && out.back().symbols == m.symbols)
            out.back().coeff += m.coeff;
        else
            out.push_back(m);
    }
    return CovExpr(std::move(out));
}

/**
 * W_G(x, y): one monomial per unblocked path between two distinct nodes of
 * a (possibly augmented) standardized model; auxiliary edges contribute
 * their +1 / -lambda weights.
 */
inline CovExpr wright_expression(const AugmentedGraph& ag, std::size_t x, std::size_t y,
                                 std::size_t cap = 100000) {
    const MixedGraph& g = ag.graph();
    if (x == y) throw ValidationError("Wright expression requires distinct variables");
    std::vector<Path> paths = enumerate_unblocked_paths(g, x, y, {}, cap);
    std::vector<Monomial> monomials;
    monomials.reserve(paths.size());
    for (const auto& p : paths) {
        Monomial m{1, {}};
        for (const auto& s : p.steps) {
            if (s.kind == StepKind::bidirected) {
                m.symbols.push_back(g.bidirected()[s.edge].label);
            } else {
                WrightWeight w = ag.wright_weight(s.edge);
                m.coeff *= w.sign;
                if (w.symbol) m.symbols.push_back(*w.symbol);
            }
        }
        monomials.push_back(std::move(m));
    }
    return CovExpr(std::move(monomials));
}

inline CovExpr wright_expression(const MixedGraph& g, std::size_t x, std::size_t y,
                                 std::size_t cap = 100000) {
    return wright_expression(augment(g, {}), x, y, cap);
}

inline double evaluate(const CovExpr& expr, const SymbolAssignment& assignment) {
    double total = 0.0;
    for (const auto& m : expr.monomials()) {
        double term = double(m.coeff);
        for (const auto& s : m.symbols) {
            auto it = assignment.find(s);
            if (it == assignment.end()) throw ValidationError("missing symbol value: " + s);
            term *= it->second;
        }
        total += term;
    }
    return total;
}

/// "d - b^2*d - b*C_wz*d" style rendering of the canonical form.
inline std::string to_string(const CovExpr& expr) {
    if (expr.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& m : expr.monomials()) {
        long long c = m.coeff;
        if (first) {
            if (c < 0) os << "-";
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        first = false;
        long long mag = c < 0 ? -c : c;
        bool need_star = false;
        if (mag != 1 || m.symbols.empty()) {
            os << mag;
            need_star = true;
        }
        for (std::size_t i = 0; i < m.symbols.size();) {
            std::size_t j = i;
            while (j < m.symbols.size() && m.symbols[j] == m.symbols[i]) ++j;
            if (need_star) os << "*";
            os << m.symbols[i];
            if (j - i > 1) os << "^" << (j - i);
            need_star = true;
            i = j;
        }
    }
    return os.str();
}

}  // namespace semid
