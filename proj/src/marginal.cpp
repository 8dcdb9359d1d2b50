#include "mipll/marginal.hpp"

#include <algorithm>
#include <cmath>

namespace mipll {

namespace {

constexpr double kLogFloor = 1e-12;

Vec cumulative(const Vec& r) {
    Vec f(r.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        acc += r[i];
        f[i] = acc;
    }
    return f;
}

// M-fold self-convolution of r; index j holds P(sum of M draws == j).
Vec self_convolve(const Vec& r, int times) {
    Vec acc{1.0};
    for (int t = 0; t < times; ++t) {
        Vec next(acc.size() + r.size() - 1, 0.0);
        for (std::size_t a = 0; a < acc.size(); ++a)
            for (std::size_t b = 0; b < r.size(); ++b) next[a + b] += acc[a] * r[b];
        acc = std::move(next);
    }
    return acc;
}

// Sum over the leaves below each node of per-leaf values.
Vec subtree_sums(const HierarchyTree& tree, const Vec& leaf_values) {
    Vec below(tree.names.size(), 0.0);
    for (std::size_t j = 0; j < tree.leaf_nodes.size(); ++j) {
        int n = tree.leaf_nodes[j];
        while (n >= 0) {
            below[n] += leaf_values[j];
            n = tree.parent[n];
        }
    }
    return below;
}

}  // namespace

Vec forward_map(const TransitionSpec& spec, const Vec& r) {
    require(static_cast<int>(r.size()) == spec.num_classes(), ErrorCode::ShapeError,
            "marginal length does not match the class count");
    const int cs = spec.num_partial_labels();
    const int m = spec.arity();
    Vec p(cs, 0.0);
    switch (spec.kind()) {
        case TransitionKind::Max: {
            Vec f = cumulative(r);
            double prev = 0.0;
            for (int s = 0; s < cs; ++s) {
                double cur = std::pow(f[s], m);
                p[s] = cur - prev;
                prev = cur;
            }
            break;
        }
        case TransitionKind::Sum: {
            Vec conv = self_convolve(r, m);
            for (int s = 0; s < cs; ++s) p[s] = conv[s];
            break;
        }
        case TransitionKind::Hierarchy: {
            const auto& tree = spec.tree();
            Vec below = subtree_sums(tree, r);
            for (std::size_t n = 0; n < tree.names.size(); ++n) {
                double mass;
                if (tree.children[n].empty()) {
                    int j = static_cast<int>(std::find(tree.leaf_nodes.begin(), tree.leaf_nodes.end(),
                                                       static_cast<int>(n)) -
                                             tree.leaf_nodes.begin());
                    mass = r[j] * r[j];
                } else {
                    mass = below[n] * below[n];
                    for (int ch : tree.children[n]) mass -= below[ch] * below[ch];
                }
                p[spec.partial_index(PartialLabel{tree.names[n]})] += mass;
            }
            break;
        }
        case TransitionKind::Table: {
            PreimageIndex index(spec);
            for (int s = 0; s < cs; ++s) {
                double acc = 0.0;
                index.for_each(spec.partial_space()[s], [&](const std::vector<int>& y) {
                    double prod = 1.0;
                    for (int label : y) prod *= r[label];
                    acc += prod;
                });
                p[s] = acc;
            }
            break;
        }
    }
    return p;
}

Matrix forward_map_grad(const TransitionSpec& spec, const Vec& r) {
    require(static_cast<int>(r.size()) == spec.num_classes(), ErrorCode::ShapeError,
            "marginal length does not match the class count");
    const int cs = spec.num_partial_labels();
    const int c = spec.num_classes();
    const int m = spec.arity();
    Matrix jac(cs, c, 0.0);
    switch (spec.kind()) {
        case TransitionKind::Max: {
            Vec f = cumulative(r);
            for (int s = 0; s < cs; ++s) {
                double dcur = m * std::pow(f[s], m - 1);
                double dprev = s > 0 ? m * std::pow(f[s - 1], m - 1) : 0.0;
                for (int k = 0; k < c; ++k) {
                    double g = 0.0;
                    if (k <= s) g += dcur;
                    if (k <= s - 1) g -= dprev;
                    jac(s, k) = g;
                }
            }
            break;
        }
        case TransitionKind::Sum: {
            Vec conv = self_convolve(r, m - 1);  // length (M-1)(c-1)+1
            for (int s = 0; s < cs; ++s)
                for (int k = 0; k < c; ++k) {
                    int idx = s - k;
                    if (idx >= 0 && idx < static_cast<int>(conv.size())) jac(s, k) = m * conv[idx];
                }
            break;
        }
        case TransitionKind::Hierarchy: {
            const auto& tree = spec.tree();
            Vec below = subtree_sums(tree, r);
            // Child subtree containing each leaf, per internal node on its path.
            for (std::size_t n = 0; n < tree.names.size(); ++n) {
                int row = spec.partial_index(PartialLabel{tree.names[n]});
                if (tree.children[n].empty()) {
                    int j = static_cast<int>(std::find(tree.leaf_nodes.begin(), tree.leaf_nodes.end(),
                                                       static_cast<int>(n)) -
                                             tree.leaf_nodes.begin());
                    jac(row, j) += 2.0 * r[j];
                    continue;
                }
                for (int k = 0; k < c; ++k) {
                    // Walk up from leaf k; contributes only if it sits below n.
                    int cur = tree.leaf_nodes[k];
                    int via_child = -1;
                    while (cur >= 0 && cur != static_cast<int>(n)) {
                        via_child = cur;
                        cur = tree.parent[cur];
                    }
                    if (cur != static_cast<int>(n)) continue;
                    jac(row, k) += 2.0 * below[n] - 2.0 * below[via_child];
                }
            }
            break;
        }
        case TransitionKind::Table: {
            PreimageIndex index(spec);
            for (int s = 0; s < cs; ++s) {
                index.for_each(spec.partial_space()[s], [&](const std::vector<int>& y) {
                    for (std::size_t i = 0; i < y.size(); ++i) {
                        double prod = 1.0;
                        for (std::size_t i2 = 0; i2 < y.size(); ++i2)
                            if (i2 != i) prod *= r[y[i2]];
                        jac(s, y[i]) += prod;
                    }
                });
            }
            break;
        }
    }
    return jac;
}

Vec empirical_partial_hist(const std::vector<PartialLabel>& labels, const TransitionSpec& spec) {
    require(!labels.empty(), ErrorCode::EmptyInput, "no partial labels given");
    Vec hist(spec.num_partial_labels(), 0.0);
    for (const auto& s : labels) hist[spec.partial_index(s)] += 1.0;
    for (double& h : hist) h /= static_cast<double>(labels.size());
    return hist;
}

EstimateResult estimate_marginal(const Vec& p_bar, const TransitionSpec& spec,
                                 const EstimatorConfig& cfg) {
    require(static_cast<int>(p_bar.size()) == spec.num_partial_labels(), ErrorCode::ShapeError,
            "histogram length does not match the partial-label space");
    check_simplex(p_bar, "partial histogram");
    const int c = spec.num_classes();

    Vec u(c, 1.0);
    auto cross_entropy = [&](const Vec& p_hat) {
        double ce = 0.0;
        for (std::size_t j = 0; j < p_bar.size(); ++j)
            ce -= p_bar[j] * std::log(std::max(p_hat[j], kLogFloor));
        return ce;
    };

    EstimateResult result;
    result.loss_trace.reserve(cfg.iterations);
    for (int it = 0; it < cfg.iterations; ++it) {
        Vec r = softmax(u);
        Vec p_hat = forward_map(spec, r);
        double loss = cross_entropy(p_hat);
        require(std::isfinite(loss), ErrorCode::NumericalFailure,
                "non-finite loss at iteration " + std::to_string(it));
        result.loss_trace.push_back(loss);
        result.iterations_run = it + 1;

        // dCE/dp, then through the polynomial map and the softmax.
        Vec dp(p_hat.size(), 0.0);
        for (std::size_t j = 0; j < p_hat.size(); ++j)
            if (p_hat[j] > kLogFloor) dp[j] = -p_bar[j] / p_hat[j];
        Matrix jac = forward_map_grad(spec, r);
        Vec dr(c, 0.0);
        for (int j = 0; j < jac.rows; ++j)
            for (int k = 0; k < c; ++k) dr[k] += jac(j, k) * dp[j];
        double mean = dot(r, dr);
        Vec du(c);
        for (int k = 0; k < c; ++k) du[k] = r[k] * (dr[k] - mean);

        if (l2_norm(du) < cfg.grad_tolerance) break;
        for (int k = 0; k < c; ++k) u[k] -= cfg.step * du[k];
    }
    result.r = softmax(u);
    return result;
}

}  // namespace mipll
