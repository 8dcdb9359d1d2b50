#include "mipll/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mipll/lp.hpp"
#include "mipll/marginal.hpp"
#include "mipll/rng.hpp"

namespace mipll {

namespace {
constexpr double kScoreFloor = 1e-12;
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

Vec long_tail_marginal(int c, double rho) {
    require(c >= 1, ErrorCode::InvalidArgument, "need at least one class");
    require(rho == 0.0 || rho >= 1.0, ErrorCode::InvalidImbalance,
            "imbalance ratio must be 0 (balanced) or >= 1");
    Vec r(c, 1.0 / c);
    if (rho == 0.0 || c == 1) return r;
    double total = 0.0;
    for (int j = 0; j < c; ++j) {
        r[j] = std::pow(rho, -static_cast<double>(j) / (c - 1));
        total += r[j];
    }
    for (double& x : r) x /= total;
    return r;
}

Dataset gen_dataset(const SyntheticConfig& cfg, const TransitionSpec& spec) {
    require(spec.num_classes() == cfg.c && spec.arity() == cfg.m, ErrorCode::ShapeError,
            "transition does not match the synthetic config");
    require(cfg.d >= cfg.c, ErrorCode::FeatureDimTooSmall,
            "feature dimension must be at least the class count");
    require(cfg.m_partial > 0 && cfg.m_test > 0, ErrorCode::InvalidArgument,
            "sample counts must be positive");

    Dataset data;
    data.marginal = long_tail_marginal(cfg.c, cfg.rho);
    Rng rng(cfg.seed);

    auto draw_point = [&](int label) {
        Vec x(cfg.d, 0.0);
        x[label] = cfg.mean_scale;
        if (cfg.noise_std > 0.0)
            for (int f = 0; f < cfg.d; ++f) x[f] += rng.normal(0.0, cfg.noise_std);
        return x;
    };

    data.train.reserve(cfg.m_partial);
    std::vector<int> gold(cfg.m);
    for (int k = 0; k < cfg.m_partial; ++k) {
        PartialSample sample;
        sample.x.reserve(cfg.m);
        for (int i = 0; i < cfg.m; ++i) {
            gold[i] = rng.categorical(data.marginal);
            sample.x.push_back(draw_point(gold[i]));
        }
        sample.s = spec.eval(gold);
        data.train.push_back(std::move(sample));
    }

    data.test.reserve(cfg.m_test);
    for (int k = 0; k < cfg.m_test; ++k) {
        int y = rng.categorical(data.marginal);
        data.test.push_back(TestPoint{draw_point(y), y});
    }
    return data;
}

Vec LinearSoftmaxModel::logits(const Vec& x) const {
    Vec z = bias;
    for (int f = 0; f < weights.rows; ++f) {
        if (x[f] == 0.0) continue;
        for (int j = 0; j < weights.cols; ++j) z[j] += weights(f, j) * x[f];
    }
    return z;
}

Vec LinearSoftmaxModel::score(const Vec& x) const { return softmax(logits(x)); }

SemanticLossResult semantic_loss(const std::vector<Vec>& score_rows, const TransitionSpec& spec,
                                 const PartialLabel& s, std::int64_t materialize_cap) {
    const int m = spec.arity();
    const int c = spec.num_classes();
    require(static_cast<int>(score_rows.size()) == m, ErrorCode::ShapeError,
            "expected one score row per instance slot");
    for (const auto& row : score_rows)
        require(static_cast<int>(row.size()) == c, ErrorCode::ShapeError,
                "score row length does not match the class count");

    std::vector<Vec> clamped = score_rows;
    for (auto& row : clamped)
        for (double& x : row) x = std::max(x, kScoreFloor);

    PreimageIndex index(spec, materialize_cap);
    std::int64_t count = index.count(s);
    require(count <= materialize_cap, ErrorCode::PreimageTooLarge,
            "pre-image too large for exact enumeration");

    double mass = 0.0;
    std::vector<Vec> partial(m, Vec(c, 0.0));  // d mass / d score[i][j]
    index.for_each(s, [&](const std::vector<int>& y) {
        double prod = 1.0;
        for (int i = 0; i < m; ++i) prod *= clamped[i][y[i]];
        mass += prod;
        for (int i = 0; i < m; ++i) {
            double rest = 1.0;
            for (int i2 = 0; i2 < m; ++i2)
                if (i2 != i) rest *= clamped[i2][y[i2]];
            partial[i][y[i]] += rest;
        }
    });

    SemanticLossResult out;
    double safe_mass = std::max(mass, kScoreFloor);
    out.loss = -std::log(safe_mass);
    out.grad.assign(m, Vec(c, 0.0));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j) out.grad[i][j] = -partial[i][j] / safe_mass;
    return out;
}

namespace {

// d loss / d logits given scores and d loss / d scores.
Vec chain_through_softmax(const Vec& scores, const Vec& dscores) {
    const int c = static_cast<int>(scores.size());
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += dscores[j] * scores[j];
    Vec dz(c);
    for (int j = 0; j < c; ++j) dz[j] = scores[j] * (dscores[j] - mean);
    return dz;
}

EpochMetrics measure(const LinearSoftmaxModel& model, const Dataset& data,
                     const TransitionSpec& spec, int epoch) {
    EpochMetrics metric;
    metric.epoch = epoch;

    int hits = 0;
    std::vector<int> labels(spec.arity());
    for (const auto& sample : data.train) {
        for (int i = 0; i < spec.arity(); ++i) {
            Vec sc = model.score(sample.x[i]);
            labels[i] = argmax_lowest(sc);
        }
        if (spec.eval(labels) == sample.s) ++hits;
    }
    metric.partial_acc = data.train.empty() ? 0.0 : static_cast<double>(hits) / data.train.size();

    EvalReport report = evaluate(model, data.test, spec.num_classes());
    metric.test_acc = report.accuracy;
    metric.per_class_acc = report.per_class_acc;
    return metric;
}

}  // namespace

TrainResult train(const Dataset& data, const TransitionSpec& spec, const TrainConfig& cfg) {
    require(!data.train.empty(), ErrorCode::EmptyInput, "no training samples");
    require(cfg.epochs >= 1 && cfg.batch >= 1, ErrorCode::InvalidArgument,
            "epochs and batch size must be positive");
    const int m = spec.arity();
    const int c = spec.num_classes();
    const int d = static_cast<int>(data.train.front().x.front().size());

    TrainResult result;
    result.model = LinearSoftmaxModel(d, c);

    switch (cfg.rhat_source) {
        case RhatSource::Gold:
            result.rhat_used = data.marginal;
            break;
        case RhatSource::Supplied:
            require(static_cast<int>(cfg.supplied_rhat.size()) == c, ErrorCode::ShapeError,
                    "supplied marginal has the wrong length");
            result.rhat_used = cfg.supplied_rhat;
            break;
        case RhatSource::Algorithm1: {
            std::vector<PartialLabel> partials;
            partials.reserve(data.train.size());
            for (const auto& sample : data.train) partials.push_back(sample.s);
            Vec hist = empirical_partial_hist(partials, spec);
            result.rhat_used = estimate_marginal(hist, spec).r;
            break;
        }
    }

    Rng shuffle_rng(Rng::derive(cfg.seed, 0xA11CE));
    std::vector<int> order(data.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    Matrix grad_w(d, c, 0.0);
    Vec grad_b(c, 0.0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the run's own stream; identical seeds reproduce
        // the exact batch sequence.
        for (std::size_t i = order.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform() * i);
            if (j >= i) j = i - 1;
            std::swap(order[i - 1], order[j]);
        }

        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            std::size_t end = std::min(order.size(), start + cfg.batch);
            const int n = static_cast<int>(end - start);
            std::fill(grad_w.data.begin(), grad_w.data.end(), 0.0);
            std::fill(grad_b.begin(), grad_b.end(), 0.0);

            // Scores for the whole batch, one matrix per slot.
            std::vector<Matrix> scores(m, Matrix(n, c, 0.0));
            for (int l = 0; l < n; ++l) {
                const auto& sample = data.train[order[start + l]];
                for (int i = 0; i < m; ++i) {
                    Vec sc = result.model.score(sample.x[i]);
                    scores[i].set_row(l, sc);
                }
            }

            bool use_semantic = cfg.method == TrainMethod::SemanticLoss;
            std::vector<Matrix> q;
            if (!use_semantic) {
                std::vector<PartialLabel> partials;
                partials.reserve(n);
                for (int l = 0; l < n; ++l) partials.push_back(data.train[order[start + l]].s);
                try {
                    PseudoLabelProblem prob =
                        build_lp(scores, partials, spec, result.rhat_used, cfg.eps_frac);
                    lp::LpSolution sol = lp::solve_lp(prob.lp);
                    if (sol.status == lp::SolveStatus::Optimal) {
                        q = extract_pseudo_labels(sol, prob, PseudoLabelMode::Soft).q;
                    } else {
                        use_semantic = true;
                        ++result.lp_fallbacks;
                    }
                } catch (const Error&) {
                    use_semantic = true;
                    ++result.lp_fallbacks;
                }
            }

            for (int l = 0; l < n; ++l) {
                const auto& sample = data.train[order[start + l]];
                std::vector<Vec> rows(m);
                for (int i = 0; i < m; ++i) rows[i] = scores[i].row(l);

                for (int i = 0; i < m; ++i) {
                    Vec dz;
                    if (use_semantic) {
                        if (i == 0) {
                            SemanticLossResult sl = semantic_loss(rows, spec, sample.s);
                            for (int i2 = 0; i2 < m; ++i2) {
                                Vec dzi = chain_through_softmax(rows[i2], sl.grad[i2]);
                                for (int f = 0; f < d; ++f)
                                    for (int j = 0; j < c; ++j)
                                        grad_w(f, j) += sample.x[i2][f] * dzi[j] / n;
                                for (int j = 0; j < c; ++j) grad_b[j] += dzi[j] / n;
                            }
                        }
                        continue;
                    }
                    // Cross-entropy between pseudo-labels and scores: the
                    // logit gradient is scores - Q.
                    dz.assign(c, 0.0);
                    for (int j = 0; j < c; ++j) dz[j] = rows[i][j] - q[i](l, j);
                    for (int f = 0; f < d; ++f)
                        for (int j = 0; j < c; ++j) grad_w(f, j) += sample.x[i][f] * dz[j] / n;
                    for (int j = 0; j < c; ++j) grad_b[j] += dz[j] / n;
                }
            }

            for (int f = 0; f < d; ++f)
                for (int j = 0; j < c; ++j)
                    result.model.weights(f, j) -= cfg.learning_rate * grad_w(f, j);
            for (int j = 0; j < c; ++j) result.model.bias[j] -= cfg.learning_rate * grad_b[j];
        }

        result.history.push_back(measure(result.model, data, spec, epoch + 1));
    }
    return result;
}

EvalReport evaluate_scores(const Matrix& scores, const std::vector<int>& gold, int c,
                           Adjustment adjustment, const Vec& r_hat,
                           const CarotParams& carot_params) {
    require(!gold.empty(), ErrorCode::EmptyInput, "empty test set");
    require(scores.rows == static_cast<int>(gold.size()) && scores.cols == c,
            ErrorCode::ShapeError, "score matrix shape mismatch");

    std::vector<int> preds;
    switch (adjustment) {
        case Adjustment::None:
            preds = row_argmax(scores);
            break;
        case Adjustment::LogitAdjust:
            preds = logit_adjust(scores, r_hat);
            break;
        case Adjustment::Carot:
            preds = row_argmax(carot_adjust(scores, r_hat, carot_params).b);
            break;
    }

    EvalReport report;
    report.support.assign(c, 0);
    report.per_class_acc.assign(c, 0.0);
    report.confusion = Matrix(c, c, 0.0);
    long correct = 0;
    for (std::size_t k = 0; k < gold.size(); ++k) {
        require(gold[k] >= 0 && gold[k] < c, ErrorCode::InvalidLabel, "gold label out of range");
        ++report.support[gold[k]];
        report.confusion(gold[k], preds[k]) += 1.0;
        if (preds[k] == gold[k]) {
            ++correct;
            report.per_class_acc[gold[k]] += 1.0;
        }
    }
    report.accuracy = static_cast<double>(correct) / gold.size();
    for (int j = 0; j < c; ++j) {
        if (report.support[j] == 0) {
            report.per_class_acc[j] = kNaN;
            for (int jp = 0; jp < c; ++jp) report.confusion(j, jp) = kNaN;
        } else {
            report.per_class_acc[j] /= report.support[j];
            for (int jp = 0; jp < c; ++jp) report.confusion(j, jp) /= report.support[j];
        }
    }
    return report;
}

EvalReport evaluate(const LinearSoftmaxModel& model, const std::vector<TestPoint>& test, int c,
                    Adjustment adjustment, const Vec& r_hat, const CarotParams& carot_params) {
    require(!test.empty(), ErrorCode::EmptyInput, "empty test set");
    Matrix scores(static_cast<int>(test.size()), c, 0.0);
    std::vector<int> gold(test.size());
    for (std::size_t k = 0; k < test.size(); ++k) {
        scores.set_row(static_cast<int>(k), model.score(test[k].x));
        gold[k] = test[k].y;
    }
    return evaluate_scores(scores, gold, c, adjustment, r_hat, carot_params);
}

}  // namespace mipll
