#include "mipll/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mipll/rng.hpp"

namespace mipll {

SigmaMatrix build_sigma(const TransitionSpec& spec, const Vec& r) {
    require(spec.arity() == 2, ErrorCode::UnsupportedArity,
            "sigma matrix construction requires M = 2");
    require(static_cast<int>(r.size()) == spec.num_classes(), ErrorCode::ShapeError,
            "marginal length does not match the class count");
    check_simplex(r, "marginal");
    const int c = spec.num_classes();
    const int d = c * c;

    // Partial-label index of every gold/predicted pair, up front.
    std::vector<int> sig(d);
    std::vector<int> pair(2);
    for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j) {
            pair[0] = i;
            pair[1] = j;
            sig[i * c + j] = spec.partial_index(spec.eval(pair));
        }

    Matrix raw(d, d, 0.0);
    for (int i = 0; i < c; ++i)
        for (int ip = 0; ip < c; ++ip) {
            int row = vec_index(c, i, ip);
            for (int j = 0; j < c; ++j) {
                double rij = r[i] * r[j];
                for (int jp = 0; jp < c; ++jp) {
                    if (sig[i * c + j] != sig[ip * c + jp])
                        raw(row, vec_index(c, j, jp)) = rij;
                }
            }
        }

    SigmaMatrix out;
    out.c = c;
    out.r = r;
    out.spec = spec;
    out.sigma = Matrix(d, d, 0.0);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b <= a; ++b) {
            double v = 0.5 * (raw(a, b) + raw(b, a));
            out.sigma(a, b) = v;
            out.sigma(b, a) = v;
        }
    return out;
}

double partial_risk_quadratic(const SigmaMatrix& sigma, const Vec& h) {
    require(static_cast<int>(h.size()) == sigma.c * sigma.c, ErrorCode::ShapeError,
            "confusion vector length does not match sigma");
    return quad_form(sigma.sigma, h);
}

double class_risk(const Vec& h, int class_j) {
    int c = static_cast<int>(std::lround(std::sqrt(static_cast<double>(h.size()))));
    require(static_cast<std::size_t>(c) * c == h.size(), ErrorCode::ShapeError,
            "confusion vector length is not a perfect square");
    require(class_j >= 0 && class_j < c, ErrorCode::InvalidLabel, "class index out of range");
    double risk = 0.0;
    for (int jp = 0; jp < c; ++jp)
        if (jp != class_j) risk += h[vec_index(c, class_j, jp)];
    return risk;
}

double relaxed_bound(int c, double partial_risk) {
    require(partial_risk >= 0.0, ErrorCode::InvalidArgument, "partial risk must be nonnegative");
    return std::sqrt(static_cast<double>(c) * (c - 1) * partial_risk);
}

bool m_unambiguous(const TransitionSpec& spec) {
    const int c = spec.num_classes();
    std::vector<PartialLabel> outs;
    std::vector<int> diag(spec.arity());
    for (int j = 0; j < c; ++j) {
        std::fill(diag.begin(), diag.end(), j);
        outs.push_back(spec.eval(diag));
    }
    std::sort(outs.begin(), outs.end());
    return std::adjacent_find(outs.begin(), outs.end()) == outs.end();
}

double generalization_bound(double emp_risk, long m_partial, int d_F, int arity, int c,
                            double delta) {
    require(delta > 0.0 && delta <= 1.0, ErrorCode::InvalidArgument, "delta must lie in (0, 1]");
    require(m_partial >= 1 && d_F >= 1, ErrorCode::InvalidArgument,
            "sample size and dimension must be positive");
    const double e = std::exp(1.0);
    double inner = 6.0 * arity * static_cast<double>(c) * c * d_F / e;
    require(inner > 1.0, ErrorCode::InvalidRegime, "log(6Mc^2 d_F / e) is nonpositive");
    double dim = 2.0 * d_F * std::log(inner);
    double ratio = static_cast<double>(m_partial) / dim;
    require(e * ratio > 1.0, ErrorCode::InvalidRegime,
            "sample size too small for the capacity term");
    double capacity = std::sqrt(2.0 * std::log(e * ratio) / ratio);
    double confidence = std::sqrt(std::log(1.0 / delta) / (2.0 * m_partial));
    return emp_risk + capacity + confidence;
}

namespace {

// Projection of a c^2 vector onto the product of per-gold-class simplices
// (row-stochastic nonnegative H).
void project_rows(int c, Vec& h) {
    Vec row(c);
    for (int i = 0; i < c; ++i) {
        for (int jp = 0; jp < c; ++jp) row[jp] = h[vec_index(c, i, jp)];
        Vec proj = project_to_simplex(row);
        for (int jp = 0; jp < c; ++jp) h[vec_index(c, i, jp)] = proj[jp];
    }
}

struct AugLagOutcome {
    Vec h;
    double value = std::numeric_limits<double>::quiet_NaN();
    double constraint_gap = std::numeric_limits<double>::infinity();
};

Vec identity_confusion(int c) {
    Vec h(static_cast<std::size_t>(c) * c, 0.0);
    for (int i = 0; i < c; ++i) h[vec_index(c, i, i)] = 1.0;
    return h;
}

// Mix h toward an anchor until the quadratic form hits the target exactly
// (the segment stays inside the row-stochastic polytope). Returns false when
// the anchor does not bracket the target.
bool restore_to_surface(const SigmaMatrix& sm, Vec& h, double target, const Vec& lo_anchor,
                        const Vec& hi_anchor) {
    const int d = sm.c * sm.c;
    double cur = quad_form(sm.sigma, h) - target;
    if (std::fabs(cur) < 1e-12) return true;
    const Vec& anchor = cur > 0.0 ? lo_anchor : hi_anchor;
    Vec probe(d);
    auto gap_at = [&](double t) {
        for (int k = 0; k < d; ++k) probe[k] = (1.0 - t) * h[k] + t * anchor[k];
        return quad_form(sm.sigma, probe) - target;
    };
    if (gap_at(1.0) * cur > 0.0) return false;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        if (gap_at(mid) * cur > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double t = 0.5 * (lo + hi);
    for (int k = 0; k < d; ++k) h[k] = (1.0 - t) * h[k] + t * anchor[k];
    return true;
}

// Maximize the class-j risk under the quadratic partial-risk constraint:
// augmented-Lagrangian penalty with projected-gradient inner solves, started
// from a point restored onto the constraint surface and re-restored after
// every multiplier update (the penalty alone stalls when the dual variable
// is large). `equality` selects h'Sh == target versus h'Sh <= target.
AugLagOutcome solve_restart(const SigmaMatrix& sm, int class_j, double target, bool equality,
                            const BoundSolverConfig& cfg, Rng& rng, const Vec& hi_anchor) {
    const int c = sm.c;
    const int d = c * c;

    Vec h(d);
    for (int i = 0; i < c; ++i) {
        Vec row = rng.dirichlet_uniform(c);
        for (int jp = 0; jp < c; ++jp) h[vec_index(c, i, jp)] = row[jp];
    }
    const Vec lo_anchor = identity_confusion(c);
    auto restore = [&](Vec& x) {
        if (!equality && quad_form(sm.sigma, x) <= target) return true;  // interior is fine
        return restore_to_surface(sm, x, target, lo_anchor, hi_anchor);
    };
    if (!restore(h)) {
        AugLagOutcome out;
        out.h = std::move(h);
        return out;
    }

    double lambda = 0.0;
    double mu = cfg.initial_penalty;

    auto constraint = [&](const Vec& x) { return quad_form(sm.sigma, x) - target; };
    auto merit = [&](const Vec& x) {
        double g = constraint(x);
        if (!equality) g = std::max(g + lambda / mu, 0.0) - lambda / mu;  // one-sided shift
        // Maximize risk == minimize its negation plus the penalty terms.
        return -class_risk(x, class_j) + lambda * g + 0.5 * mu * g * g;
    };

    double step = 0.1;
    Vec trial(d);
    for (int outer = 0; outer < cfg.outer_iterations; ++outer) {
        for (int inner = 0; inner < cfg.inner_iterations; ++inner) {
            double g = constraint(h);
            double active = equality ? 1.0 : (g + lambda / mu > 0.0 ? 1.0 : 0.0);
            double shifted = equality ? g : std::max(g + lambda / mu, 0.0) - lambda / mu;

            Vec grad = matvec(sm.sigma, h);
            double scale = active * (lambda + mu * shifted) * 2.0;
            for (int k = 0; k < d; ++k) grad[k] *= scale;
            for (int jp = 0; jp < c; ++jp)
                if (jp != class_j) grad[vec_index(c, class_j, jp)] -= 1.0;

            double base = merit(h);
            bool moved = false;
            double dist = 0.0;
            for (int bt = 0; bt < 40; ++bt) {
                for (int k = 0; k < d; ++k) trial[k] = h[k] - step * grad[k];
                project_rows(c, trial);
                if (merit(trial) < base - 1e-14) {
                    dist = 0.0;
                    for (int k = 0; k < d; ++k) dist = std::max(dist, std::fabs(trial[k] - h[k]));
                    h.swap(trial);
                    moved = true;
                    step = std::min(step * 1.5, 50.0);
                    break;
                }
                step *= 0.5;
            }
            if (!moved || dist < 1e-13) break;
        }

        double g = constraint(h);
        lambda += mu * g;
        if (!equality) lambda = std::max(lambda, 0.0);
        mu = std::min(mu * cfg.penalty_growth, 1e6);
        restore(h);
    }
    restore(h);

    AugLagOutcome out;
    double g = constraint(h);
    out.constraint_gap = equality ? std::fabs(g) : std::max(g, 0.0);
    out.value = class_risk(h, class_j);
    out.h = std::move(h);
    return out;
}

// Heuristic maximizer of the quadratic form over the feasible polytope, for
// the infeasibility guard and as the high-risk restoration anchor (its
// minimum is 0 at the identity confusion).
std::pair<double, Vec> max_quadratic_heuristic(const SigmaMatrix& sm,
                                               const BoundSolverConfig& cfg) {
    const int c = sm.c;
    const int d = c * c;
    double best = 0.0;
    Vec best_h = identity_confusion(c);
    for (int attempt = 0; attempt < 5; ++attempt) {
        Rng rng(Rng::derive(cfg.seed, 7000 + attempt));
        Vec h(d);
        for (int i = 0; i < c; ++i) {
            Vec row = rng.dirichlet_uniform(c);
            for (int jp = 0; jp < c; ++jp) h[vec_index(c, i, jp)] = row[jp];
        }
        double step = 0.5;
        Vec trial(d);
        for (int it = 0; it < 400; ++it) {
            Vec grad = matvec(sm.sigma, h);
            for (int k = 0; k < d; ++k) trial[k] = h[k] + step * 2.0 * grad[k];
            project_rows(c, trial);
            if (quad_form(sm.sigma, trial) > quad_form(sm.sigma, h)) {
                h = trial;
                step = std::min(step * 1.5, 100.0);
            } else {
                step *= 0.5;
                if (step < 1e-12) break;
            }
        }
        double q = quad_form(sm.sigma, h);
        if (q > best) {
            best = q;
            best_h = h;
        }
    }
    return {best, best_h};
}

BoundResult run_protocol(const SigmaMatrix& sm, int class_j, double partial_risk, bool equality,
                         const BoundSolverConfig& cfg) {
    require(class_j >= 0 && class_j < sm.c, ErrorCode::InvalidLabel, "class index out of range");
    require(partial_risk >= 0.0, ErrorCode::InvalidArgument, "partial risk must be nonnegative");
    auto [q_max, hi_anchor] = max_quadratic_heuristic(sm, cfg);
    if (equality) {
        require(partial_risk <= q_max + 1e-6, ErrorCode::InfeasibleRisk,
                "requested partial risk exceeds the achievable maximum (~" + std::to_string(q_max) + ")");
    }

    Vec valid;
    for (int restart = 0; restart < cfg.restarts; ++restart) {
        Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(restart)));
        AugLagOutcome out = solve_restart(sm, class_j, partial_risk, equality, cfg, rng, hi_anchor);
        if (out.constraint_gap > cfg.feasibility_tol) continue;
        if (out.value < cfg.valid_lo - 1e-12 || out.value > cfg.valid_hi + 1e-12) continue;
        valid.push_back(out.value);
    }
    require(!valid.empty(), ErrorCode::SolverFailed, "no restart produced a valid bound value");

    std::sort(valid.begin(), valid.end());
    std::size_t n = valid.size();
    double median = (n % 2 == 1) ? valid[n / 2] : 0.5 * (valid[n / 2 - 1] + valid[n / 2]);
    return BoundResult{median, static_cast<int>(n)};
}

}  // namespace

BoundResult solve_class_bound(const SigmaMatrix& sigma, int class_j, double partial_risk,
                              const BoundSolverConfig& cfg) {
    return run_protocol(sigma, class_j, partial_risk, /*equality=*/true, cfg);
}

BoundResult solve_class_bound_relaxed(const SigmaMatrix& sigma, int class_j, double partial_risk,
                                      const BoundSolverConfig& cfg) {
    return run_protocol(sigma, class_j, partial_risk, /*equality=*/false, cfg);
}

std::vector<CurvePoint> bound_curve(const TransitionSpec& spec, const Vec& r, int class_j,
                                    const Vec& grid, const BoundSolverConfig& cfg) {
    require(spec.arity() == 2, ErrorCode::UnsupportedArity, "bound curves require M = 2");
    SigmaMatrix sm = build_sigma(spec, r);
    std::vector<CurvePoint> curve;
    curve.reserve(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        BoundSolverConfig point_cfg = cfg;
        point_cfg.seed = Rng::derive(cfg.seed, 1000 + g);
        CurvePoint pt;
        pt.r_p = grid[g];
        try {
            BoundResult res = solve_class_bound(sm, class_j, grid[g], point_cfg);
            pt.phi = res.value;
            pt.valid_restarts = res.valid_restarts;
        } catch (const Error&) {
            pt.phi = std::numeric_limits<double>::quiet_NaN();
            pt.valid_restarts = 0;
        }
        curve.push_back(pt);
    }
    return curve;
}

}  // namespace mipll
