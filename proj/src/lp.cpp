#include "poprec/lp.hpp"

#include <algorithm>
#include <cmath>

#include "poprec/core.hpp"

namespace poprec {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-10;
constexpr int kDegenerateRunBeforeBland = 50;

class Tableau {
public:
    Tableau(int rows, int cols) : m_(rows), n_(cols), t_((rows + 1) * (cols + 1), 0.0), basis_(rows, -1) {}

    double& at(int r, int c) { return t_[static_cast<std::size_t>(r) * (n_ + 1) + c]; }
    double at(int r, int c) const { return t_[static_cast<std::size_t>(r) * (n_ + 1) + c]; }
    double& rhs(int r) { return at(r, n_); }
    double& cost(int c) { return at(m_, c); }
    double value() const { return -at(m_, n_); }

    int rows() const { return m_; }
    int cols() const { return n_; }
    std::vector<int>& basis() { return basis_; }

    void pivot(int r, int c) {
        double* pr = &at(r, 0);
        const double inv = 1.0 / pr[c];
        for (int j = 0; j <= n_; ++j) pr[j] *= inv;
        pr[c] = 1.0;
        for (int i = 0; i <= m_; ++i) {
            if (i == r) continue;
            double* pi = &at(i, 0);
            const double f = pi[c];
            if (f == 0.0) continue;
            for (int j = 0; j <= n_; ++j) pi[j] -= f * pr[j];
            pi[c] = 0.0;
        }
        basis_[r] = c;
    }

    /// Loads an objective over the columns and prices out the basis.
    void set_objective(const std::vector<double>& c) {
        for (int j = 0; j <= n_; ++j) at(m_, j) = j < n_ ? c[j] : 0.0;
        for (int r = 0; r < m_; ++r) {
            const double cb = c[basis_[r]];
            if (cb == 0.0) continue;
            for (int j = 0; j <= n_; ++j) at(m_, j) -= cb * at(r, j);
        }
    }

    /// Minimizes over columns [0, allowed). Returns false when unbounded.
    bool run(int allowed, int& iterations) {
        bool bland = false;
        int degenerate_run = 0;
        const int limit = 200 * (m_ + n_) + 1000;
        for (;;) {
            int enter = -1;
            double best = -kCostTol;
            for (int j = 0; j < allowed; ++j) {
                const double d = at(m_, j);
                if (d < best) {
                    enter = j;
                    if (bland) break;
                    best = d;
                }
            }
            if (enter < 0) return true;

            int leave = -1;
            double ratio = 0.0, piv = 0.0;
            for (int r = 0; r < m_; ++r) {
                const double a = at(r, enter);
                if (a <= kPivotTol) continue;
                const double q = std::max(at(r, n_), 0.0) / a;
                bool take = false;
                if (leave < 0 || q < ratio - 1e-12) {
                    take = true;
                } else if (q <= ratio + 1e-12) {
                    take = bland ? basis_[r] < basis_[leave] : a > piv;
                }
                if (take) {
                    leave = r;
                    ratio = q;
                    piv = a;
                }
            }
            if (leave < 0) return false;

            degenerate_run = ratio <= 1e-12 ? degenerate_run + 1 : 0;
            if (degenerate_run > kDegenerateRunBeforeBland) bland = true;
            pivot(leave, enter);
            if (++iterations > limit) throw Error("simplex iteration limit reached");
        }
    }

private:
    int m_, n_;
    std::vector<double> t_;
    std::vector<int> basis_;
};

struct EqRow {
    std::vector<double> a;  // structural coefficients
    int slack = -1;          // slack index or -1
    double slack_sign = 0.0;
    double rhs = 0.0;
};

double dot(const std::vector<double>& a, const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * x[i];
    return s;
}

}  // namespace

LinearProgram::LinearProgram(int vars)
    : num_vars(vars), lower(static_cast<std::size_t>(vars), 0.0), upper(static_cast<std::size_t>(vars), kInf) {}

void LinearProgram::add_row(std::vector<double> a, double lo, double hi) {
    rows.push_back({std::move(a), lo, hi});
}

std::string to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "infeasible";
}

LpResult solve_lp(const LinearProgram& lp) {
    const int nv = lp.num_vars;
    if (nv < 0) throw ParameterError("LP: negative variable count");
    if (lp.lower.size() != static_cast<std::size_t>(nv) || lp.upper.size() != static_cast<std::size_t>(nv)) {
        throw ParameterError("LP: bound vectors do not match the variable count");
    }
    if (!lp.objective.empty() && lp.objective.size() != static_cast<std::size_t>(nv)) {
        throw ParameterError("LP: objective length does not match the variable count");
    }
    LpResult result;
    for (int i = 0; i < nv; ++i) {
        if (!std::isfinite(lp.lower[i])) throw ParameterError("LP: lower bounds must be finite");
        if (std::isnan(lp.upper[i])) throw ParameterError("LP: NaN upper bound");
        if (lp.upper[i] < lp.lower[i]) return result;
    }

    std::vector<EqRow> eq;
    int slacks = 0;
    for (int i = 0; i < nv; ++i) {
        if (!std::isfinite(lp.upper[i])) continue;
        EqRow r;
        r.a.assign(nv, 0.0);
        r.a[i] = 1.0;
        r.slack = slacks++;
        r.slack_sign = 1.0;
        r.rhs = lp.upper[i] - lp.lower[i];
        eq.push_back(std::move(r));
    }
    for (const auto& row : lp.rows) {
        if (row.a.size() != static_cast<std::size_t>(nv)) throw ParameterError("LP: row length mismatch");
        double scale = 0.0;
        for (double v : row.a) {
            if (!std::isfinite(v)) throw ParameterError("LP: non-finite row coefficient");
            scale = std::max(scale, std::abs(v));
        }
        if (std::isnan(row.lo) || std::isnan(row.hi)) throw ParameterError("LP: NaN row bound");
        if (row.lo == LinearProgram::kInf || row.hi == -LinearProgram::kInf) {
            throw ParameterError("LP: row bound is unbounded in the wrong direction");
        }
        const double shift = dot(row.a, lp.lower);
        if (scale == 0.0) {
            if (row.lo > shift + kFeasibilityTolerance || row.hi < shift - kFeasibilityTolerance) return result;
            continue;
        }
        std::vector<double> a(row.a);
        for (double& v : a) v /= scale;
        const double lo = (row.lo - shift) / scale;
        const double hi = (row.hi - shift) / scale;
        if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-15 * std::max(1.0, std::abs(hi))) {
            eq.push_back({a, -1, 0.0, 0.5 * (lo + hi)});
            continue;
        }
        if (std::isfinite(hi)) eq.push_back({a, slacks++, 1.0, hi});
        if (std::isfinite(lo)) eq.push_back({a, slacks++, -1.0, lo});
    }

    const int m = static_cast<int>(eq.size());
    int artificials = 0;
    std::vector<int> art_of_row(m, -1);
    for (int r = 0; r < m; ++r) {
        if (eq[r].rhs < 0.0) {
            for (double& v : eq[r].a) v = -v;
            eq[r].slack_sign = -eq[r].slack_sign;
            eq[r].rhs = -eq[r].rhs;
        }
        if (!(eq[r].slack >= 0 && eq[r].slack_sign > 0.0)) art_of_row[r] = artificials++;
    }

    const int n_real = nv + slacks;
    const int ncols = n_real + artificials;
    Tableau tab(m, ncols);
    for (int r = 0; r < m; ++r) {
        for (int j = 0; j < nv; ++j) tab.at(r, j) = eq[r].a[j];
        if (eq[r].slack >= 0) tab.at(r, nv + eq[r].slack) = eq[r].slack_sign;
        tab.rhs(r) = eq[r].rhs;
        if (art_of_row[r] >= 0) {
            tab.at(r, n_real + art_of_row[r]) = 1.0;
            tab.basis()[r] = n_real + art_of_row[r];
        } else {
            tab.basis()[r] = nv + eq[r].slack;
        }
    }

    if (artificials > 0) {
        std::vector<double> c(ncols, 0.0);
        for (int j = n_real; j < ncols; ++j) c[j] = 1.0;
        tab.set_objective(c);
        tab.run(ncols, result.iterations);
        result.infeasibility = std::max(0.0, tab.value());
        if (result.infeasibility > kFeasibilityTolerance) return result;
        for (int r = 0; r < m; ++r) {
            if (tab.basis()[r] < n_real) continue;
            int best = -1;
            double mag = 1e-9;
            for (int j = 0; j < n_real; ++j) {
                if (std::abs(tab.at(r, j)) > mag) {
                    mag = std::abs(tab.at(r, j));
                    best = j;
                }
            }
            if (best >= 0) tab.pivot(r, best);
        }
    }

    std::vector<double> c(ncols, 0.0);
    for (int j = 0; j < nv && !lp.objective.empty(); ++j) c[j] = lp.objective[j];
    tab.set_objective(c);
    if (!tab.run(n_real, result.iterations)) {
        result.status = LpStatus::Unbounded;
        return result;
    }

    result.x = lp.lower;
    for (int r = 0; r < m; ++r) {
        const int b = tab.basis()[r];
        if (b < nv) result.x[b] += std::max(0.0, tab.rhs(r));
    }
    double violation = 0.0;
    for (int i = 0; i < nv; ++i) {
        violation = std::max(violation, lp.lower[i] - result.x[i]);
        if (std::isfinite(lp.upper[i])) violation = std::max(violation, result.x[i] - lp.upper[i]);
    }
    for (const auto& row : lp.rows) {
        double scale = 0.0;
        for (double v : row.a) scale = std::max(scale, std::abs(v));
        if (scale == 0.0) continue;
        const double ax = dot(row.a, result.x);
        if (std::isfinite(row.lo)) violation = std::max(violation, (row.lo - ax) / scale);
        if (std::isfinite(row.hi)) violation = std::max(violation, (ax - row.hi) / scale);
    }
    result.max_violation = std::max(0.0, violation);
    result.objective = lp.objective.empty() ? 0.0 : dot(lp.objective, result.x);
    result.status = LpStatus::Optimal;
    return result;
}

bool lp_feasible(const LinearProgram& lp) { return solve_lp(lp).status != LpStatus::Infeasible; }

}  // namespace poprec
