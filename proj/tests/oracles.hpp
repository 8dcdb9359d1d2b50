// Test-side oracles, independent of the implementation paths they check.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mipll/carot.hpp"
#include "mipll/linalg.hpp"
#include "mipll/rng.hpp"
#include "mipll/transition.hpp"

namespace oracles {

using mipll::Matrix;
using mipll::Vec;

// Direct four-nested-loop partial risk: sum over gold pairs (i,j) and
// predicted pairs (ip,jp) of r_i r_j [sigma(i,j) != sigma(ip,jp)] H[i,ip]
// H[j,jp]. H is passed row-major (rows = gold class).
inline double partial_risk_bruteforce(const mipll::TransitionSpec& spec, const Vec& r,
                                      const Matrix& h_matrix) {
    const int c = spec.num_classes();
    double risk = 0.0;
    std::vector<int> gold(2), pred(2);
    for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j) {
            gold[0] = i;
            gold[1] = j;
            auto s_gold = spec.eval(gold);
            for (int ip = 0; ip < c; ++ip)
                for (int jp = 0; jp < c; ++jp) {
                    pred[0] = ip;
                    pred[1] = jp;
                    if (spec.eval(pred) != s_gold)
                        risk += r[i] * r[j] * h_matrix(i, ip) * h_matrix(j, jp);
                }
        }
    return risk;
}

// Column-major flattening matching the library's vec convention.
inline Vec flatten_confusion(const Matrix& h_matrix) {
    const int c = h_matrix.rows;
    Vec h(static_cast<std::size_t>(c) * c, 0.0);
    for (int i = 0; i < c; ++i)
        for (int ip = 0; ip < c; ++ip) h[ip * c + i] = h_matrix(i, ip);
    return h;
}

inline Matrix random_row_stochastic(int c, mipll::Rng& rng) {
    Matrix h(c, c, 0.0);
    for (int i = 0; i < c; ++i) {
        Vec row = rng.dirichlet_uniform(c);
        for (int j = 0; j < c; ++j) h(i, j) = row[j];
    }
    return h;
}

// Central finite differences of a vector-valued map.
inline Matrix finite_difference_jacobian(const std::function<Vec(const Vec&)>& map, const Vec& at,
                                         double step = 1e-5) {
    Vec base = map(at);
    Matrix jac(static_cast<int>(base.size()), static_cast<int>(at.size()), 0.0);
    for (std::size_t k = 0; k < at.size(); ++k) {
        Vec lo = at, hi = at;
        lo[k] -= step;
        hi[k] += step;
        Vec f_lo = map(lo), f_hi = map(hi);
        for (std::size_t j = 0; j < base.size(); ++j)
            jac(static_cast<int>(j), static_cast<int>(k)) = (f_hi[j] - f_lo[j]) / (2.0 * step);
    }
    return jac;
}

// Generic convex solve of the score-adjustment objective: entropic mirror
// descent with backtracking over the row simplices. Independent of the
// alternating potential updates used by the implementation.
inline Matrix rsot_minimize(const Matrix& scores, const Vec& r_hat, double eta, double tau,
                            int max_iters = 60000) {
    const int n = scores.rows, c = scores.cols;
    Matrix x(n, c, 1.0 / c);
    auto objective = [&](const Matrix& m) {
        return mipll::rsot_objective(m, scores, r_hat, eta, tau);
    };
    double f = objective(x);
    double lr = 1.0;
    for (int it = 0; it < max_iters; ++it) {
        Vec col(c, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < c; ++j) col[j] += x(i, j);
        Matrix grad(n, c, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < c; ++j) {
                double p = std::max(scores(i, j), 1e-12);
                double col_term = std::log(std::max(col[j], 1e-300) / (n * std::max(r_hat[j], 1e-9)));
                grad(i, j) = -std::log(p) + tau * col_term +
                             eta * (std::log(std::max(x(i, j), 1e-300)) + 1.0);
            }
        Matrix trial(n, c, 0.0);
        double f_trial = 0.0;
        while (true) {
            for (int i = 0; i < n; ++i) {
                double mx = -1e300;
                for (int j = 0; j < c; ++j) mx = std::max(mx, -lr * grad(i, j));
                double z = 0.0;
                for (int j = 0; j < c; ++j) {
                    trial(i, j) = x(i, j) * std::exp(-lr * grad(i, j) - mx);
                    z += trial(i, j);
                }
                for (int j = 0; j < c; ++j) trial(i, j) /= z;
            }
            f_trial = objective(trial);
            if (f_trial <= f + 1e-15 || lr < 1e-14) break;
            lr *= 0.5;
        }
        double move = 0.0;
        for (std::size_t k = 0; k < x.data.size(); ++k)
            move = std::max(move, std::fabs(trial.data[k] - x.data[k]));
        x = trial;
        bool stalled = std::fabs(f - f_trial) < 1e-15 && move < 1e-14;
        f = f_trial;
        if (stalled) break;
        lr = std::min(lr * 1.3, 1e3);
    }
    return x;
}

}  // namespace oracles
