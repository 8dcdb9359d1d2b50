#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mipll/linalg.hpp"

namespace mipll::lp {

enum class RowSense { LessEq, Eq, GreaterEq };

struct SparseRow {
    std::vector<int> cols;
    std::vector<double> coefs;

    void add(int col, double coef) {
        cols.push_back(col);
        coefs.push_back(coef);
    }
};

// General form: min c'x  s.t.  rows (<=, =, >=), lower <= x <= upper.
struct LpProblem {
    int num_vars = 0;
    Vec objective;
    Vec lower;
    Vec upper;  // +inf allowed
    std::vector<SparseRow> rows;
    std::vector<RowSense> senses;
    Vec rhs;

    int add_variable(double cost, double lo, double hi) {
        objective.push_back(cost);
        lower.push_back(lo);
        upper.push_back(hi);
        return num_vars++;
    }
    void add_row(SparseRow row, RowSense sense, double b) {
        rows.push_back(std::move(row));
        senses.push_back(sense);
        rhs.push_back(b);
    }
};

enum class SolveStatus { Optimal, Infeasible, IterationLimit };

const char* status_name(SolveStatus status);

struct LpSolution {
    SolveStatus status = SolveStatus::IterationLimit;
    Vec x;  // structural variables only
    double objective = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
};

// Bounded-variable primal simplex, two phases, dense basis inverse.
// Dantzig pricing with a Bland's-rule fallback after a degenerate streak.
LpSolution solve_lp(const LpProblem& problem, int iteration_cap = 50000);

// Largest row violation of a candidate point (structural variables).
double max_row_violation(const LpProblem& problem, const Vec& x);

}  // namespace mipll::lp
