#pragma once

#include <cstdint>
#include <vector>

#include "mipll/linalg.hpp"
#include "mipll/transition.hpp"

namespace mipll {

// Class-specific risk bounds from the partial risk. The partial risk of a
// classifier with class-conditional confusion matrix H (rows = gold class,
// columns = prediction) is a quadratic form h' Sigma h in h = vec(H), and
// the worst class-specific risk at a given partial-risk level is the value
// of a quadratically constrained program over row-stochastic H.

// Column-major vectorization: entry H[i,i'] sits at index i' * c + i.
inline int vec_index(int c, int gold, int predicted) { return predicted * c + gold; }

struct SigmaMatrix {
    int c = 0;
    Matrix sigma;       // c^2 x c^2, symmetric
    Vec r;              // marginal used to build it
    TransitionSpec spec;
};

// Sigma such that h' Sigma h enumerates all gold pairs (i,j) and predicted
// pairs (i',j') with sigma(i,j) != sigma(i',j'). Requires M = 2.
SigmaMatrix build_sigma(const TransitionSpec& spec, const Vec& r);

double partial_risk_quadratic(const SigmaMatrix& sigma, const Vec& h);

// 1 - H[j,j], the probability of mispredicting an instance of class j.
double class_risk(const Vec& h, int class_j);

// sqrt(c(c-1) R_P), the closed-form bound available under M-unambiguity.
double relaxed_bound(int c, double partial_risk);

// Distinct diagonal label vectors receive distinct partial labels.
bool m_unambiguous(const TransitionSpec& spec);

// Empirical-risk inflation of the partial risk at confidence 1 - delta for a
// hypothesis class of Natarajan dimension d_F.
double generalization_bound(double emp_risk, long m_partial, int d_F, int arity, int c, double delta);

struct BoundSolverConfig {
    int restarts = 10;
    int outer_iterations = 30;    // multiplier updates per restart
    int inner_iterations = 300;   // projected-gradient steps per outer round
    double initial_penalty = 100.0;
    double penalty_growth = 2.0;
    double feasibility_tol = 1e-6;
    std::uint64_t seed = 0;
    double valid_lo = 0.0;        // results outside [valid_lo, valid_hi] are dropped
    double valid_hi = 1.0;
};

struct BoundResult {
    double value = 0.0;
    int valid_restarts = 0;
};

// Approximate maximum of the class-j risk subject to h' Sigma h == R_P over
// row-stochastic nonnegative H. Randomized restarts; invalid results are
// dropped and the median of the valid ones is returned.
BoundResult solve_class_bound(const SigmaMatrix& sigma, int class_j, double partial_risk,
                              const BoundSolverConfig& cfg = {});

// Same program with the relaxed constraint h' Sigma h <= R_P (nested
// feasible sets, so the value is monotone in R_P).
BoundResult solve_class_bound_relaxed(const SigmaMatrix& sigma, int class_j, double partial_risk,
                                      const BoundSolverConfig& cfg = {});

struct CurvePoint {
    double r_p = 0.0;
    double phi = 0.0;            // NaN when every restart failed
    int valid_restarts = 0;
};

std::vector<CurvePoint> bound_curve(const TransitionSpec& spec, const Vec& r, int class_j,
                                    const Vec& grid, const BoundSolverConfig& cfg = {});

}  // namespace mipll
