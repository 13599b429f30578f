#pragma once

#include <string>
#include <vector>

// Dense two-phase simplex for the small linear programs this project builds
// (at most ~10 variables and ~20 rows). Variables carry explicit box bounds;
// rows are general linear relations.
namespace qkd::lp {

enum class Relation { le, ge, eq };

struct Row {
    std::vector<double> coeff;
    Relation rel = Relation::le;
    double rhs = 0.0;
};

struct Problem {
    std::vector<double> objective;  // minimize objective.x + offset
    double offset = 0.0;
    std::vector<double> lower, upper;  // per-variable bounds, lower <= upper
    std::vector<Row> rows;

    int num_vars() const { return static_cast<int>(objective.size()); }
};

enum class Status { optimal, infeasible, iteration_limit };

struct Solution {
    Status status = Status::infeasible;
    double value = 0.0;
    std::vector<double> x;
    int iterations = 0;
    std::vector<int> active_rows;  // rows binding at the optimum
};

// feasibility_tol is relative to the scaled rows (each row and variable is
// normalized internally before pivoting).
Solution solve(const Problem& problem, double feasibility_tol = 1e-12);

}  // namespace qkd::lp
