#pragma once

#include <vector>

#include "mipll/linalg.hpp"
#include "mipll/simplex.hpp"
#include "mipll/transition.hpp"

namespace mipll {

// Training-time pseudo-labeling: each partial sample's DNF is rewritten to
// CNF with one fresh variable per conjunction (Tseytin), the clause rows are
// assembled into one batch LP together with per-instance sum-to-one rows and
// per-slot marginal adherence rows, and pseudo-labels are read off the
// primal solution.

// Linear rows produced for one sample. Variable ids are global LP column
// indices supplied by the caller through the q/alpha bases.
struct CnfEncoding {
    int sample_index = 0;
    int first_alpha = 0;   // column of alpha_{l,1}
    int num_alpha = 0;     // R_l
    std::vector<lp::SparseRow> rows;
    std::vector<lp::RowSense> senses;
    Vec rhs;
};

// q_{l,i,j} lives at q_base + (slot * c + label); alphas are consecutive
// from alpha_base.
CnfEncoding tseytin(const DnfFormula& dnf, int q_base, int alpha_base);

struct PseudoLabelProblem {
    lp::LpProblem lp;
    int batch = 0;   // n
    int arity = 0;   // M
    int classes = 0; // c
    std::vector<int> alpha_base;  // per sample
    std::vector<int> alpha_count; // per sample
    TransitionSpec spec;
    std::vector<PartialLabel> partials;

    int q_index(int sample, int slot, int label) const {
        return (sample * arity + slot) * classes + label;
    }
};

// Assemble the batch LP: objective <-log P_i, Q_i> on the q variables,
// Tseytin rows per sample, sum-to-one rows per (sample, slot), box [0,1] on
// every variable, and per-slot column-sum rows within eps = eps_frac * n of
// n * r_hat.
PseudoLabelProblem build_lp(const std::vector<Matrix>& scores,
                            const std::vector<PartialLabel>& partials, const TransitionSpec& spec,
                            const Vec& r_hat, double eps_frac);

enum class PseudoLabelMode { Soft, Hard };

struct PseudoLabels {
    std::vector<Matrix> q;           // M matrices, n x c
    std::vector<int> hard_violations;  // samples whose rounded labels break sigma
};

PseudoLabels extract_pseudo_labels(const lp::LpSolution& solution,
                                   const PseudoLabelProblem& problem, PseudoLabelMode mode);

}  // namespace mipll
