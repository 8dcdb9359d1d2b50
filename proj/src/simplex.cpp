#include "mipll/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace mipll::lp {

const char* status_name(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::IterationLimit: return "IterationLimit";
    }
    return "Unknown";
}

double max_row_violation(const LpProblem& problem, const Vec& x) {
    double worst = 0.0;
    for (std::size_t r = 0; r < problem.rows.size(); ++r) {
        double lhs = 0.0;
        const auto& row = problem.rows[r];
        for (std::size_t k = 0; k < row.cols.size(); ++k) lhs += row.coefs[k] * x[row.cols[k]];
        double diff = lhs - problem.rhs[r];
        switch (problem.senses[r]) {
            case RowSense::LessEq: worst = std::max(worst, diff); break;
            case RowSense::GreaterEq: worst = std::max(worst, -diff); break;
            case RowSense::Eq: worst = std::max(worst, std::fabs(diff)); break;
        }
    }
    return worst;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-10;

// Internal tableau in equality form: columns = structurals, logicals
// (slack/surplus) and artificials; every row reads A x = b with b >= 0.
struct Tableau {
    int m = 0;           // rows
    int n_struct = 0;    // structural columns
    int n_total = 0;
    std::vector<std::vector<std::pair<int, double>>> cols;  // column-wise sparse A
    Vec lower, upper;
    Vec cost_phase2;
    Vec b;
    std::vector<int> artificials;

    std::vector<int> basis;         // row -> variable
    std::vector<int> position;      // variable -> row, or -1
    std::vector<char> at_upper;     // nonbasic rest position
    Vec x;                          // current values, all variables

    Matrix binv;

    void build(const LpProblem& p) {
        m = static_cast<int>(p.rows.size());
        n_struct = p.num_vars;
        cols.assign(n_struct, {});
        lower = p.lower;
        upper = p.upper;
        cost_phase2 = p.objective;
        b = p.rhs;

        std::vector<double> row_sign(m, 1.0);
        std::vector<RowSense> senses = p.senses;
        for (int r = 0; r < m; ++r) {
            if (b[r] < 0.0) {
                b[r] = -b[r];
                row_sign[r] = -1.0;
                if (senses[r] == RowSense::LessEq)
                    senses[r] = RowSense::GreaterEq;
                else if (senses[r] == RowSense::GreaterEq)
                    senses[r] = RowSense::LessEq;
            }
        }
        for (std::size_t r = 0; r < p.rows.size(); ++r)
            for (std::size_t k = 0; k < p.rows[r].cols.size(); ++k)
                cols[p.rows[r].cols[k]].push_back(
                    {static_cast<int>(r), row_sign[r] * p.rows[r].coefs[k]});

        basis.assign(m, -1);
        // Logicals: slack for <=, surplus for >=; slacks of <= rows double as
        // the starting basis, everything else gets an artificial.
        for (int r = 0; r < m; ++r) {
            if (senses[r] == RowSense::LessEq) {
                int v = add_column(r, 1.0, 0.0, kInf, 0.0);
                basis[r] = v;
            } else if (senses[r] == RowSense::GreaterEq) {
                add_column(r, -1.0, 0.0, kInf, 0.0);
            }
        }
        // Artificials are fixed at zero; the starting basics violate that
        // bound whenever b > 0, which is exactly what phase 1 repairs.
        for (int r = 0; r < m; ++r) {
            if (basis[r] == -1) {
                int v = add_column(r, 1.0, 0.0, 0.0, 0.0);
                artificials.push_back(v);
                basis[r] = v;
            }
        }
        n_total = static_cast<int>(cols.size());

        position.assign(n_total, -1);
        at_upper.assign(n_total, 0);
        x.assign(n_total, 0.0);
        for (int j = 0; j < n_total; ++j) x[j] = lower[j];
        for (int r = 0; r < m; ++r) position[basis[r]] = r;

        binv = Matrix(m, m, 0.0);
        for (int r = 0; r < m; ++r) binv(r, r) = 1.0;
        recompute_basics();
    }

    int add_column(int row, double coef, double lo, double hi, double cost) {
        int v = static_cast<int>(cols.size());
        cols.push_back({{row, coef}});
        lower.push_back(lo);
        upper.push_back(hi);
        cost_phase2.push_back(cost);
        return v;
    }

    // x_B = B^-1 (b - N x_N)
    void recompute_basics() {
        Vec rhs_eff = b;
        for (int j = 0; j < n_total; ++j) {
            if (position[j] >= 0 || x[j] == 0.0) continue;
            for (const auto& [r, a] : cols[j]) rhs_eff[r] -= a * x[j];
        }
        for (int r = 0; r < m; ++r) {
            double v = 0.0;
            for (int k = 0; k < m; ++k) v += binv(r, k) * rhs_eff[k];
            x[basis[r]] = v;
        }
    }

    void refactorize() {
        // Gauss-Jordan inverse of the current basis matrix.
        Matrix work(m, 2 * m, 0.0);
        for (int r = 0; r < m; ++r) work(r, m + r) = 1.0;
        for (int col = 0; col < m; ++col)
            for (const auto& [r, a] : cols[basis[col]]) work(r, col) = a;
        for (int col = 0; col < m; ++col) {
            int piv = col;
            for (int r = col + 1; r < m; ++r)
                if (std::fabs(work(r, col)) > std::fabs(work(piv, col))) piv = r;
            if (std::fabs(work(piv, col)) < 1e-13) continue;  // singular; keep old inverse row
            if (piv != col)
                for (int k = 0; k < 2 * m; ++k) std::swap(work(piv, k), work(col, k));
            double inv = 1.0 / work(col, col);
            for (int k = 0; k < 2 * m; ++k) work(col, k) *= inv;
            for (int r = 0; r < m; ++r) {
                if (r == col) continue;
                double f = work(r, col);
                if (f == 0.0) continue;
                for (int k = 0; k < 2 * m; ++k) work(r, k) -= f * work(col, k);
            }
        }
        for (int r = 0; r < m; ++r)
            for (int k = 0; k < m; ++k) binv(r, k) = work(r, m + k);
        recompute_basics();
    }

    Vec ftran(int j) const {  // B^-1 A_j
        Vec d(m, 0.0);
        for (const auto& [r, a] : cols[j])
            for (int i = 0; i < m; ++i) d[i] += binv(i, r) * a;
        return d;
    }

    Vec btran(const Vec& c_basic) const {  // y = B^-T c_B
        Vec y(m, 0.0);
        for (int r = 0; r < m; ++r) {
            if (c_basic[r] == 0.0) continue;
            for (int k = 0; k < m; ++k) y[k] += c_basic[r] * binv(r, k);
        }
        return y;
    }

    double reduced_cost(int j, const Vec& y, const Vec& cost) const {
        double rc = cost[j];
        for (const auto& [r, a] : cols[j]) rc -= y[r] * a;
        return rc;
    }

    // Replace basis row `row` by variable `entering`, with d = B^-1 A_e.
    void pivot(int row, int entering, const Vec& d) {
        double piv = d[row];
        double inv = 1.0 / piv;
        for (int k = 0; k < m; ++k) binv(row, k) *= inv;
        for (int r = 0; r < m; ++r) {
            if (r == row) continue;
            double f = d[r];
            if (f == 0.0) continue;
            for (int k = 0; k < m; ++k) binv(r, k) -= f * binv(row, k);
        }
        position[basis[row]] = -1;
        basis[row] = entering;
        position[entering] = row;
    }
};

struct PhaseResult {
    bool feasible_direction_missing = false;  // no entering candidate: phase optimal
    int iterations = 0;
    bool hit_cap = false;
};

// One simplex phase over the given cost vector; `phase1` switches the cost
// to the dynamic infeasibility measure.
PhaseResult run_phase(Tableau& t, bool phase1, int iteration_cap, int& global_iter) {
    PhaseResult res;
    int degenerate_streak = 0;
    int since_refactor = 0;

    while (true) {
        if (global_iter >= iteration_cap) {
            res.hit_cap = true;
            return res;
        }
        ++global_iter;
        ++res.iterations;

        if (phase1) {
            bool any_infeasible = false;
            Vec c_basic(t.m, 0.0);
            for (int r = 0; r < t.m; ++r) {
                int v = t.basis[r];
                if (t.x[v] < t.lower[v] - kFeasTol) {
                    c_basic[r] = -1.0;
                    any_infeasible = true;
                } else if (t.x[v] > t.upper[v] + kFeasTol) {
                    c_basic[r] = 1.0;
                    any_infeasible = true;
                }
            }
            if (!any_infeasible) return res;
            Vec y = t.btran(c_basic);
            // Entering: nonbasic that reduces total infeasibility.
            int entering = -1;
            double best = 0.0;
            bool bland = degenerate_streak > 40;
            for (int j = 0; j < t.n_total; ++j) {
                if (t.position[j] >= 0) continue;
                if (t.lower[j] == t.upper[j]) continue;
                double rc = 0.0;  // phase-1 cost of a nonbasic variable is zero
                for (const auto& [r, a] : t.cols[j]) rc -= y[r] * a;
                bool at_up = t.at_upper[j];
                double score = 0.0;
                if (!at_up && rc < -kCostTol) score = -rc;
                if (at_up && rc > kCostTol) score = rc;
                if (score > 0.0) {
                    if (bland) {
                        entering = j;
                        break;
                    }
                    if (score > best) {
                        best = score;
                        entering = j;
                    }
                }
            }
            if (entering < 0) return res;  // infeasibility is locally minimal
            double dir = t.at_upper[entering] ? -1.0 : 1.0;
            Vec d = t.ftran(entering);

            // Ratio test: in-bounds basics must stay in bounds, out-of-bounds
            // basics block once they reach the bound they violate; the
            // entering variable may flip to its opposite bound.
            double t_max = t.upper[entering] - t.lower[entering];
            int leave_row = -1;
            bool leave_to_upper = false;
            for (int r = 0; r < t.m; ++r) {
                int v = t.basis[r];
                double delta = -dir * d[r];  // d x_Bv / d step
                if (std::fabs(delta) < kPivotTol) continue;
                double xv = t.x[v];
                double limit = kInf;
                bool to_upper = false;
                if (xv < t.lower[v] - kFeasTol) {
                    if (delta > 0) limit = (t.lower[v] - xv) / delta;
                    // moving further down never blocks in phase 1
                } else if (xv > t.upper[v] + kFeasTol) {
                    if (delta < 0) {
                        limit = (t.upper[v] - xv) / delta;
                        to_upper = true;
                    }
                } else {
                    if (delta > 0 && t.upper[v] < kInf) {
                        limit = (t.upper[v] - xv) / delta;
                        to_upper = true;
                    } else if (delta < 0) {
                        limit = (t.lower[v] - xv) / delta;
                    }
                }
                if (limit < t_max) {
                    t_max = limit;
                    leave_row = r;
                    leave_to_upper = to_upper;
                }
            }
            if (t_max >= kInf) return res;  // cannot happen with bounded entering
            t_max = std::max(t_max, 0.0);
            degenerate_streak = (t_max < 1e-10) ? degenerate_streak + 1 : 0;

            // Apply the step.
            t.x[entering] += dir * t_max;
            for (int r = 0; r < t.m; ++r) t.x[t.basis[r]] -= dir * t_max * d[r];
            if (leave_row < 0) {
                t.at_upper[entering] = !t.at_upper[entering];  // bound flip
            } else {
                int leaving = t.basis[leave_row];
                t.pivot(leave_row, entering, d);
                t.x[leaving] = leave_to_upper ? t.upper[leaving] : t.lower[leaving];
                t.at_upper[leaving] = leave_to_upper ? 1 : 0;
            }
            if (++since_refactor >= 100) {
                t.refactorize();
                since_refactor = 0;
            }
            continue;
        }

        // Phase 2.
        Vec c_basic(t.m, 0.0);
        for (int r = 0; r < t.m; ++r) c_basic[r] = t.cost_phase2[t.basis[r]];
        Vec y = t.btran(c_basic);
        int entering = -1;
        double best = 0.0;
        bool bland = degenerate_streak > 40;
        for (int j = 0; j < t.n_total; ++j) {
            if (t.position[j] >= 0) continue;
            if (t.lower[j] == t.upper[j]) continue;
            double rc = t.reduced_cost(j, y, t.cost_phase2);
            double score = 0.0;
            if (!t.at_upper[j] && rc < -kCostTol) score = -rc;
            if (t.at_upper[j] && rc > kCostTol) score = rc;
            if (score > 0.0) {
                if (bland) {
                    entering = j;
                    break;
                }
                if (score > best) {
                    best = score;
                    entering = j;
                }
            }
        }
        if (entering < 0) {
            res.feasible_direction_missing = true;
            return res;
        }
        double dir = t.at_upper[entering] ? -1.0 : 1.0;
        Vec d = t.ftran(entering);

        double t_max = t.upper[entering] - t.lower[entering];
        int leave_row = -1;
        bool leave_to_upper = false;
        for (int r = 0; r < t.m; ++r) {
            int v = t.basis[r];
            double delta = -dir * d[r];
            if (std::fabs(delta) < kPivotTol) continue;
            double limit = kInf;
            bool to_upper = false;
            if (delta > 0 && t.upper[v] < kInf) {
                limit = (t.upper[v] - t.x[v]) / delta;
                to_upper = true;
            } else if (delta < 0) {
                limit = (t.lower[v] - t.x[v]) / delta;
            }
            if (limit < t_max) {
                t_max = limit;
                leave_row = r;
                leave_to_upper = to_upper;
            }
        }
        if (t_max >= kInf) {
            // Unbounded direction; cannot occur for the bounded problems this
            // toolkit builds, treated as a solver failure upstream.
            res.hit_cap = true;
            return res;
        }
        t_max = std::max(t_max, 0.0);
        degenerate_streak = (t_max < 1e-10) ? degenerate_streak + 1 : 0;

        t.x[entering] += dir * t_max;
        for (int r = 0; r < t.m; ++r) t.x[t.basis[r]] -= dir * t_max * d[r];
        if (leave_row < 0) {
            t.at_upper[entering] = !t.at_upper[entering];
        } else {
            int leaving = t.basis[leave_row];
            t.pivot(leave_row, entering, d);
            t.x[leaving] = leave_to_upper ? t.upper[leaving] : t.lower[leaving];
            t.at_upper[leaving] = leave_to_upper ? 1 : 0;
        }
        if (++since_refactor >= 100) {
            t.refactorize();
            since_refactor = 0;
        }
    }
}

}  // namespace

LpSolution solve_lp(const LpProblem& problem, int iteration_cap) {
    for (int j = 0; j < problem.num_vars; ++j)
        require(problem.lower[j] <= problem.upper[j] && std::isfinite(problem.lower[j]),
                ErrorCode::InvalidArgument, "variable bounds must be ordered with finite lower bound");

    Tableau t;
    t.build(problem);

    LpSolution sol;
    int iter = 0;
    PhaseResult p1 = run_phase(t, /*phase1=*/true, iteration_cap, iter);
    if (p1.hit_cap) {
        sol.status = SolveStatus::IterationLimit;
        sol.iterations = iter;
        return sol;
    }
    double infeasibility = 0.0;
    for (int r = 0; r < t.m; ++r) {
        int v = t.basis[r];
        infeasibility += std::max(0.0, t.lower[v] - t.x[v]) + std::max(0.0, t.x[v] - t.upper[v]);
    }
    if (infeasibility > 1e-7) {
        sol.status = SolveStatus::Infeasible;
        sol.iterations = iter;
        return sol;
    }
    t.refactorize();

    PhaseResult p2 = run_phase(t, /*phase1=*/false, iteration_cap, iter);
    sol.iterations = iter;
    if (p2.hit_cap || !p2.feasible_direction_missing) {
        sol.status = SolveStatus::IterationLimit;
        return sol;
    }

    sol.status = SolveStatus::Optimal;
    sol.x.assign(problem.num_vars, 0.0);
    double obj = 0.0;
    for (int j = 0; j < problem.num_vars; ++j) {
        double v = t.x[j];
        v = std::max(problem.lower[j], std::min(v, problem.upper[j]));
        sol.x[j] = v;
        obj += problem.objective[j] * v;
    }
    sol.objective = obj;
    return sol;
}

}  // namespace mipll::lp
