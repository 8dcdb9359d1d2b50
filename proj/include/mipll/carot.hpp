#pragma once

#include <vector>

#include "mipll/linalg.hpp"
#include "mipll/transition.hpp"

namespace mipll {

// Testing-time score adjustment: robust semi-Sinkhorn iterations that pull a
// batch of score rows toward an estimated class marginal while keeping each
// row a distribution, plus the logit-adjustment baseline.

struct CarotParams {
    double eta = 0.05;   // entropic regularization
    double tau = 10.0;   // marginal adherence
    int iterations = 500;
};

struct AdjustedScores {
    Matrix b;  // n x c, rows sum to 1
    Vec u;     // length n
    Vec v;     // length c
};

// B_ij = exp(u_i + v_j + log(P_ij) / eta), computed in log space.
Matrix b_matrix(const Matrix& scores, const Vec& u, const Vec& v, double eta);

// Alternating potential updates (v on even iterations, u on odd ones, then a
// final u update so the returned matrix is row-stochastic). The returned
// potentials reproduce b via b_matrix.
AdjustedScores carot_adjust(const Matrix& scores, const Vec& r_hat, const CarotParams& params);

// The objective the iterations converge to: <-log P, B> + tau KL(col sums ||
// n r_hat) - eta H(B), over row-stochastic nonnegative B.
double rsot_objective(const Matrix& b, const Matrix& scores, const Vec& r_hat, double eta,
                      double tau);

std::vector<int> row_argmax(const Matrix& scores);

// argmax_j (log P_ij - log r_hat_j) per row, ties to the lowest class.
std::vector<int> logit_adjust(const Matrix& scores, const Vec& r_hat);

struct TuneResult {
    double eta = 0.0;
    double tau = 0.0;
    double partial_accuracy = 0.0;
};

// Grid search maximizing partial-label accuracy on a partially labeled
// validation batch; ties break toward larger tau, then larger eta.
TuneResult tune_carot(const std::vector<Matrix>& val_scores,
                      const std::vector<PartialLabel>& partials, const TransitionSpec& spec,
                      const Vec& eta_grid, const Vec& tau_grid, const Vec& r_hat,
                      int iterations = 500);

}  // namespace mipll
