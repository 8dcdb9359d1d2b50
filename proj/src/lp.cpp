#include "mipll/lp.hpp"

#include <cmath>

namespace mipll {

namespace {
constexpr double kScoreFloor = 1e-12;
}

CnfEncoding tseytin(const DnfFormula& dnf, int q_base, int alpha_base) {
    require(!dnf.conjunctions.empty(), ErrorCode::EmptyInput, "DNF formula has no conjunctions");
    CnfEncoding enc;
    enc.sample_index = dnf.sample_index;
    enc.first_alpha = alpha_base;
    enc.num_alpha = static_cast<int>(dnf.conjunctions.size());

    const int c = dnf.num_classes;
    auto q_col = [&](const DnfAtom& atom) { return q_base + atom.slot * c + atom.label; };

    // Cover: at least one conjunction selected.
    lp::SparseRow cover;
    for (int t = 0; t < enc.num_alpha; ++t) cover.add(alpha_base + t, 1.0);
    enc.rows.push_back(std::move(cover));
    enc.senses.push_back(lp::RowSense::GreaterEq);
    enc.rhs.push_back(1.0);

    for (int t = 0; t < enc.num_alpha; ++t) {
        const auto& conj = dnf.conjunctions[t];
        const double width = static_cast<double>(conj.size());

        // alpha -> every atom:  -|phi| alpha + sum(atoms) >= 0
        lp::SparseRow fwd;
        fwd.add(alpha_base + t, -width);
        for (const auto& atom : conj) fwd.add(q_col(atom), 1.0);
        enc.rows.push_back(std::move(fwd));
        enc.senses.push_back(lp::RowSense::GreaterEq);
        enc.rhs.push_back(0.0);

        // all atoms -> alpha:  -sum(atoms) + alpha >= 1 - |phi|
        lp::SparseRow bwd;
        for (const auto& atom : conj) bwd.add(q_col(atom), -1.0);
        bwd.add(alpha_base + t, 1.0);
        enc.rows.push_back(std::move(bwd));
        enc.senses.push_back(lp::RowSense::GreaterEq);
        enc.rhs.push_back(1.0 - width);
    }
    return enc;
}

PseudoLabelProblem build_lp(const std::vector<Matrix>& scores,
                            const std::vector<PartialLabel>& partials, const TransitionSpec& spec,
                            const Vec& r_hat, double eps_frac) {
    const int m = spec.arity();
    const int c = spec.num_classes();
    require(static_cast<int>(scores.size()) == m, ErrorCode::ShapeError,
            "expected one score matrix per instance slot");
    require(!partials.empty(), ErrorCode::EmptyInput, "empty batch");
    const int n = static_cast<int>(partials.size());
    for (const auto& p : scores)
        require(p.rows == n && p.cols == c, ErrorCode::ShapeError,
                "score matrix shape does not match the batch");
    require(static_cast<int>(r_hat.size()) == c, ErrorCode::ShapeError,
            "marginal length does not match the class count");
    require(eps_frac >= 0.0, ErrorCode::InvalidArgument, "eps_frac must be nonnegative");

    PseudoLabelProblem prob;
    prob.batch = n;
    prob.arity = m;
    prob.classes = c;
    prob.spec = spec;
    prob.partials = partials;

    // q variables first, in (sample, slot, label) order.
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < c; ++j) {
                double cost = -std::log(std::max(scores[i](l, j), kScoreFloor));
                prob.lp.add_variable(cost, 0.0, 1.0);
            }

    // Tseytin rows (alpha variables allocated per sample as we go).
    for (int l = 0; l < n; ++l) {
        DnfFormula dnf = build_dnf(spec, partials[l], l);
        int alpha_base = prob.lp.num_vars;
        for (std::size_t t = 0; t < dnf.conjunctions.size(); ++t)
            prob.lp.add_variable(0.0, 0.0, 1.0);
        prob.alpha_base.push_back(alpha_base);
        prob.alpha_count.push_back(static_cast<int>(dnf.conjunctions.size()));

        CnfEncoding enc = tseytin(dnf, prob.q_index(l, 0, 0), alpha_base);
        for (std::size_t r = 0; r < enc.rows.size(); ++r)
            prob.lp.add_row(std::move(enc.rows[r]), enc.senses[r], enc.rhs[r]);
    }

    // Sum-to-one per (sample, slot).
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < m; ++i) {
            lp::SparseRow row;
            for (int j = 0; j < c; ++j) row.add(prob.q_index(l, i, j), 1.0);
            prob.lp.add_row(std::move(row), lp::RowSense::Eq, 1.0);
        }

    // Marginal adherence: per slot and class, the column sum stays within
    // eps of n * r_hat_j.
    const double eps = eps_frac * n;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j) {
            lp::SparseRow lo, hi;
            for (int l = 0; l < n; ++l) {
                lo.add(prob.q_index(l, i, j), 1.0);
                hi.add(prob.q_index(l, i, j), 1.0);
            }
            prob.lp.add_row(std::move(lo), lp::RowSense::GreaterEq, n * r_hat[j] - eps);
            prob.lp.add_row(std::move(hi), lp::RowSense::LessEq, n * r_hat[j] + eps);
        }

    return prob;
}

PseudoLabels extract_pseudo_labels(const lp::LpSolution& solution,
                                   const PseudoLabelProblem& problem, PseudoLabelMode mode) {
    require(solution.status == lp::SolveStatus::Optimal, ErrorCode::NotSolved,
            std::string("LP status is ") + lp::status_name(solution.status));

    const int n = problem.batch, m = problem.arity, c = problem.classes;
    PseudoLabels out;
    out.q.assign(m, Matrix(n, c, 0.0));
    for (int i = 0; i < m; ++i)
        for (int l = 0; l < n; ++l)
            for (int j = 0; j < c; ++j) out.q[i](l, j) = solution.x[problem.q_index(l, i, j)];

    if (mode == PseudoLabelMode::Hard) {
        for (int l = 0; l < n; ++l) {
            std::vector<int> labels(m);
            for (int i = 0; i < m; ++i) {
                Vec row = out.q[i].row(l);
                labels[i] = argmax_lowest(row);
                for (int j = 0; j < c; ++j) out.q[i](l, j) = (j == labels[i]) ? 1.0 : 0.0;
            }
            // Rounding a fractional optimum can break the sigma constraint;
            // such samples are flagged rather than repaired.
            if (problem.spec.eval(labels) != problem.partials[l]) out.hard_violations.push_back(l);
        }
    }
    return out;
}

}  // namespace mipll
