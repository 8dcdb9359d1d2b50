#pragma once

#include <cstdint>
#include <vector>

#include "mipll/linalg.hpp"
#include "mipll/transition.hpp"

namespace mipll {

// Hidden-label marginal estimation from partial labels: the polynomial
// forward map p = Psi_sigma(r), its Jacobian, and the gradient-descent
// estimator that fits the empirical partial histogram by cross-entropy.

// p_j = sum over the pre-image of the j-th partial label of prod_i r_{y_i}.
// Closed forms for max (CDF powers) and sum (self-convolution); pairwise
// subtree sums for hierarchies; enumeration for tables.
Vec forward_map(const TransitionSpec& spec, const Vec& r);

// Jacobian dp_j / dr_k of the polynomial map, treating the r_k as free
// coordinates (row sums equal M by degree-M homogeneity). Matches central
// finite differences of forward_map.
Matrix forward_map_grad(const TransitionSpec& spec, const Vec& r);

// Frequency histogram of partial labels in canonical space order.
Vec empirical_partial_hist(const std::vector<PartialLabel>& labels, const TransitionSpec& spec);

struct EstimatorConfig {
    double step = 0.5;
    int iterations = 5000;
    std::uint64_t seed = 0;      // recorded in manifests; the estimator itself is deterministic
    double grad_tolerance = 1e-8;
};

struct EstimateResult {
    Vec r;                        // softmax(u) after the final iteration
    std::vector<double> loss_trace;  // cross-entropy after each iteration
    int iterations_run = 0;
};

// Fixed-step gradient descent on CE(p_bar, Psi(softmax(u))) from u = 1_c.
EstimateResult estimate_marginal(const Vec& p_bar, const TransitionSpec& spec,
                                 const EstimatorConfig& cfg = {});

}  // namespace mipll
