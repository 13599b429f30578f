#include "qkd/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qkd/errors.hpp"

// Two-phase dense simplex. The problems here are tiny (<= ~10 structural
// variables, <= ~25 rows after bound rows), so a full tableau with Dantzig
// pricing and a Bland fallback is both fast and easy to audit.
namespace qkd::lp {

namespace {

struct Tableau {
    int rows = 0, cols = 0;  // cols excludes the rhs column
    std::vector<double> a;   // (rows+1) x (cols+1), objective in the last row
    std::vector<int> basis;  // basic column per row

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * (cols + 1) + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * (cols + 1) + c]; }
    double& rhs(int r) { return at(r, cols); }
    double& obj(int c) { return at(rows, c); }

    void pivot(int pr, int pc) {
        double piv = at(pr, pc);
        for (int c = 0; c <= cols; ++c) at(pr, c) /= piv;
        for (int r = 0; r <= rows; ++r) {
            if (r == pr) continue;
            double f = at(r, pc);
            if (f == 0.0) continue;
            for (int c = 0; c <= cols; ++c) at(r, c) -= f * at(pr, c);
            at(r, pc) = 0.0;
        }
        at(pr, pc) = 1.0;
        basis[static_cast<std::size_t>(pr)] = pc;
    }
};

// Runs the simplex loop on the current objective row. allowed[c] == false
// columns are never entered. Returns false on iteration limit.
bool run_simplex(Tableau& t, const std::vector<char>& allowed, double tol, int& iterations) {
    const int max_iter = 500;
    int stall = 0;
    double last_obj = std::numeric_limits<double>::infinity();
    while (true) {
        if (++iterations > max_iter) return false;
        bool bland = stall > 2 * (t.rows + t.cols);
        int pc = -1;
        double best = -tol;
        for (int c = 0; c < t.cols; ++c) {
            if (!allowed[static_cast<std::size_t>(c)]) continue;
            double red = t.obj(c);
            if (bland) {
                if (red < -tol) {
                    pc = c;
                    break;
                }
            } else if (red < best) {
                best = red;
                pc = c;
            }
        }
        if (pc < 0) return true;  // optimal
        int pr = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int r = 0; r < t.rows; ++r) {
            double col = t.at(r, pc);
            if (col <= tol) continue;
            double ratio = t.rhs(r) / col;
            if (ratio < best_ratio - 1e-15 ||
                (bland && ratio < best_ratio + 1e-15 && pr >= 0 &&
                 t.basis[static_cast<std::size_t>(r)] < t.basis[static_cast<std::size_t>(pr)])) {
                best_ratio = ratio;
                pr = r;
            }
        }
        if (pr < 0) return true;  // unbounded direction; caller interprets
        t.pivot(pr, pc);
        double cur = -t.rhs(t.rows);
        if (cur < last_obj - 1e-15 * (std::abs(cur) + 1.0)) {
            stall = 0;
            last_obj = cur;
        } else {
            ++stall;
        }
    }
}

}  // namespace

Solution solve(const Problem& problem, double feasibility_tol) {
    const int n = problem.num_vars();
    if (static_cast<int>(problem.lower.size()) != n || static_cast<int>(problem.upper.size()) != n)
        throw NumericError("lp::solve: inconsistent bound sizes");

    Solution sol;
    sol.x.assign(static_cast<std::size_t>(n), 0.0);

    // Fixed variables are substituted out; the rest are scaled to [0, 1].
    std::vector<int> free_idx;
    std::vector<double> scale;
    for (int i = 0; i < n; ++i) {
        double lo = problem.lower[static_cast<std::size_t>(i)];
        double hi = problem.upper[static_cast<std::size_t>(i)];
        if (hi < lo) return sol;  // infeasible box
        sol.x[static_cast<std::size_t>(i)] = lo;
        if (hi > lo) {
            free_idx.push_back(i);
            scale.push_back(hi - lo);
        }
    }
    const int nf = static_cast<int>(free_idx.size());

    // Rows rewritten over the free variables; constant parts move to the rhs.
    struct NRow {
        std::vector<double> a;
        Relation rel;
        double rhs;
        int original;
    };
    std::vector<NRow> rows;
    for (int ri = 0; ri < static_cast<int>(problem.rows.size()); ++ri) {
        const Row& row = problem.rows[static_cast<std::size_t>(ri)];
        NRow nr{std::vector<double>(static_cast<std::size_t>(nf), 0.0), row.rel, row.rhs, ri};
        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            double c = row.coeff[static_cast<std::size_t>(i)];
            nr.rhs -= c * problem.lower[static_cast<std::size_t>(i)];
            norm = std::max(norm, std::abs(c * (problem.upper[static_cast<std::size_t>(i)] -
                                                problem.lower[static_cast<std::size_t>(i)])));
        }
        for (int j = 0; j < nf; ++j)
            nr.a[static_cast<std::size_t>(j)] =
                row.coeff[static_cast<std::size_t>(free_idx[static_cast<std::size_t>(j)])] *
                scale[static_cast<std::size_t>(j)];
        norm = std::max(norm, std::abs(nr.rhs));
        if (norm == 0.0) norm = 1.0;
        for (auto& c : nr.a) c /= norm;
        nr.rhs /= norm;
        // Rows with no free support are plain consistency checks.
        double maxa = 0.0;
        for (double c : nr.a) maxa = std::max(maxa, std::abs(c));
        if (maxa <= feasibility_tol) {
            bool ok = (nr.rel == Relation::le && nr.rhs >= -feasibility_tol) ||
                      (nr.rel == Relation::ge && nr.rhs <= feasibility_tol) ||
                      (nr.rel == Relation::eq && std::abs(nr.rhs) <= feasibility_tol);
            if (!ok) {
                sol.status = Status::infeasible;
                return sol;
            }
            continue;
        }
        rows.push_back(std::move(nr));
    }

    if (nf == 0) {
        sol.status = Status::optimal;
        sol.value = problem.offset;
        for (int i = 0; i < n; ++i)
            sol.value += problem.objective[static_cast<std::size_t>(i)] * sol.x[static_cast<std::size_t>(i)];
        return sol;
    }

    // Upper bounds of the scaled variables enter as ordinary rows.
    for (int j = 0; j < nf; ++j) {
        NRow nr{std::vector<double>(static_cast<std::size_t>(nf), 0.0), Relation::le, 1.0, -1};
        nr.a[static_cast<std::size_t>(j)] = 1.0;
        rows.push_back(std::move(nr));
    }

    const int m = static_cast<int>(rows.size());
    // Column layout: [free vars][slack/surplus][artificials].
    int n_slack = 0, n_art = 0;
    for (auto& r : rows) {
        if (r.rhs < 0.0) {  // normalize rhs sign
            for (auto& c : r.a) c = -c;
            r.rhs = -r.rhs;
            if (r.rel == Relation::le)
                r.rel = Relation::ge;
            else if (r.rel == Relation::ge)
                r.rel = Relation::le;
        }
        if (r.rel != Relation::eq) ++n_slack;
        if (r.rel != Relation::le) ++n_art;
    }

    Tableau t;
    t.rows = m;
    t.cols = nf + n_slack + n_art;
    t.a.assign(static_cast<std::size_t>(m + 1) * (t.cols + 1), 0.0);
    t.basis.assign(static_cast<std::size_t>(m), -1);

    int slack_at = nf, art_at = nf + n_slack;
    std::vector<int> art_cols;
    for (int r = 0; r < m; ++r) {
        const NRow& nr = rows[static_cast<std::size_t>(r)];
        for (int j = 0; j < nf; ++j) t.at(r, j) = nr.a[static_cast<std::size_t>(j)];
        t.rhs(r) = nr.rhs;
        if (nr.rel == Relation::le) {
            t.at(r, slack_at) = 1.0;
            t.basis[static_cast<std::size_t>(r)] = slack_at++;
        } else if (nr.rel == Relation::ge) {
            t.at(r, slack_at) = -1.0;
            ++slack_at;
            t.at(r, art_at) = 1.0;
            t.basis[static_cast<std::size_t>(r)] = art_at;
            art_cols.push_back(art_at++);
        } else {
            t.at(r, art_at) = 1.0;
            t.basis[static_cast<std::size_t>(r)] = art_at;
            art_cols.push_back(art_at++);
        }
    }

    const double tol = std::max(feasibility_tol, 1e-13);
    std::vector<char> allowed(static_cast<std::size_t>(t.cols), 1);

    // Phase 1: minimize the artificial total.
    if (n_art > 0) {
        for (int c : art_cols) t.obj(c) = 1.0;
        for (int r = 0; r < m; ++r) {
            int b = t.basis[static_cast<std::size_t>(r)];
            if (b >= nf + n_slack) {  // artificial basic: make reduced cost zero
                for (int c = 0; c <= t.cols; ++c) t.at(m, c) -= t.at(r, c);
            }
        }
        if (!run_simplex(t, allowed, tol, sol.iterations)) {
            sol.status = Status::iteration_limit;
            return sol;
        }
        double art_total = -t.rhs(m);
        if (art_total > 1e-9) {
            sol.status = Status::infeasible;
            return sol;
        }
        // Pivot any artificial still basic (at zero) out of the basis.
        for (int r = 0; r < m; ++r) {
            if (t.basis[static_cast<std::size_t>(r)] < nf + n_slack) continue;
            int pc = -1;
            for (int c = 0; c < nf + n_slack; ++c)
                if (std::abs(t.at(r, c)) > 1e-9) {
                    pc = c;
                    break;
                }
            if (pc >= 0) t.pivot(r, pc);
        }
        for (int c : art_cols) allowed[static_cast<std::size_t>(c)] = 0;
    }

    // Phase 2: the scaled original objective.
    for (int c = 0; c <= t.cols; ++c) t.at(m, c) = 0.0;
    for (int j = 0; j < nf; ++j)
        t.obj(j) = problem.objective[static_cast<std::size_t>(free_idx[static_cast<std::size_t>(j)])] *
                   scale[static_cast<std::size_t>(j)];
    for (int r = 0; r < m; ++r) {
        int b = t.basis[static_cast<std::size_t>(r)];
        double cb = t.at(m, b);
        if (cb == 0.0) continue;
        for (int c = 0; c <= t.cols; ++c) t.at(m, c) -= cb * t.at(r, c);
    }
    if (!run_simplex(t, allowed, tol, sol.iterations)) {
        sol.status = Status::iteration_limit;
        return sol;
    }

    std::vector<double> w(static_cast<std::size_t>(nf), 0.0);
    for (int r = 0; r < m; ++r) {
        int b = t.basis[static_cast<std::size_t>(r)];
        if (b < nf) w[static_cast<std::size_t>(b)] = t.rhs(r);
    }
    for (int j = 0; j < nf; ++j) {
        double wj = std::clamp(w[static_cast<std::size_t>(j)], 0.0, 1.0);
        int i = free_idx[static_cast<std::size_t>(j)];
        sol.x[static_cast<std::size_t>(i)] =
            problem.lower[static_cast<std::size_t>(i)] + scale[static_cast<std::size_t>(j)] * wj;
    }
    sol.value = problem.offset;
    for (int i = 0; i < n; ++i)
        sol.value += problem.objective[static_cast<std::size_t>(i)] * sol.x[static_cast<std::size_t>(i)];

    // Binding original rows, for the audit dump.
    for (int ri = 0; ri < static_cast<int>(problem.rows.size()); ++ri) {
        const Row& row = problem.rows[static_cast<std::size_t>(ri)];
        double lhs = 0.0, mag = std::abs(row.rhs);
        for (int i = 0; i < n; ++i) {
            lhs += row.coeff[static_cast<std::size_t>(i)] * sol.x[static_cast<std::size_t>(i)];
            mag = std::max(mag, std::abs(row.coeff[static_cast<std::size_t>(i)] *
                                         sol.x[static_cast<std::size_t>(i)]));
        }
        if (std::abs(lhs - row.rhs) <= 1e-9 * std::max(mag, 1e-300)) sol.active_rows.push_back(ri);
    }
    sol.status = Status::optimal;
    return sol;
}

}  // namespace qkd::lp
