#pragma once

#include <cstdint>
#include <vector>

#include "mipll/carot.hpp"
#include "mipll/linalg.hpp"
#include "mipll/transition.hpp"

namespace mipll {

// Desk-scale end-to-end loop: synthetic long-tail data, a linear softmax
// classifier, exact semantic-loss training, LP pseudo-label training, and
// per-class evaluation with optional testing-time adjustment.

struct SyntheticConfig {
    int c = 4;
    int d = 4;          // feature dimension, >= c
    int m = 2;          // instances per partial sample
    double rho = 0.0;   // imbalance ratio; 0 = balanced
    int m_partial = 500;
    int m_test = 1000;
    double mean_scale = 4.0;
    double noise_std = 1.0;
    std::uint64_t seed = 0;
};

struct PartialSample {
    std::vector<Vec> x;  // M feature vectors
    PartialLabel s;
};

struct TestPoint {
    Vec x;
    int y = 0;
};

struct Dataset {
    std::vector<PartialSample> train;
    std::vector<TestPoint> test;
    Vec marginal;  // generating hidden-label marginal
};

// rho = 0 -> uniform; otherwise r_j proportional to rho^(-j / (c-1)), so the
// max/min ratio is exactly rho.
Vec long_tail_marginal(int c, double rho);

Dataset gen_dataset(const SyntheticConfig& cfg, const TransitionSpec& spec);

struct LinearSoftmaxModel {
    Matrix weights;  // d x c
    Vec bias;        // c

    LinearSoftmaxModel() = default;
    LinearSoftmaxModel(int d, int c) : weights(d, c, 0.0), bias(c, 0.0) {}

    Vec logits(const Vec& x) const;
    Vec score(const Vec& x) const;  // softmax of the affine map
};

struct SemanticLossResult {
    double loss = 0.0;
    std::vector<Vec> grad;  // per slot, d loss / d scores
};

// Exact weighted-model-count loss: -log of the total score mass on the
// pre-image of s, with its analytic gradient. Scores are clamped at 1e-12.
SemanticLossResult semantic_loss(const std::vector<Vec>& score_rows, const TransitionSpec& spec,
                                 const PartialLabel& s,
                                 std::int64_t materialize_cap = PreimageIndex::kDefaultCap);

enum class TrainMethod { SemanticLoss, IlpPseudoLabel };
enum class RhatSource { Gold, Algorithm1, Supplied };

struct TrainConfig {
    TrainMethod method = TrainMethod::SemanticLoss;
    RhatSource rhat_source = RhatSource::Gold;
    Vec supplied_rhat;
    int epochs = 100;
    int batch = 16;
    double learning_rate = 0.1;
    double eps_frac = 0.05;
    std::uint64_t seed = 0;
};

struct EpochMetrics {
    int epoch = 0;
    double partial_acc = 0.0;
    double test_acc = 0.0;
    Vec per_class_acc;  // NaN where the class has no test support
};

struct TrainResult {
    LinearSoftmaxModel model;
    std::vector<EpochMetrics> history;
    int lp_fallbacks = 0;  // batches that fell back to the semantic loss
    Vec rhat_used;
};

TrainResult train(const Dataset& data, const TransitionSpec& spec, const TrainConfig& cfg);

enum class Adjustment { None, LogitAdjust, Carot };

struct EvalReport {
    double accuracy = 0.0;
    Vec per_class_acc;           // NaN for zero-support classes
    std::vector<long> support;   // test instances per gold class
    Matrix confusion;            // rows = gold, cols = predicted; NaN rows at zero support
};

EvalReport evaluate(const LinearSoftmaxModel& model, const std::vector<TestPoint>& test, int c,
                    Adjustment adjustment = Adjustment::None, const Vec& r_hat = {},
                    const CarotParams& carot_params = {});

// Evaluation of a raw score matrix against gold labels (used by the CLI and
// by adjustment experiments that bypass the model).
EvalReport evaluate_scores(const Matrix& scores, const std::vector<int>& gold, int c,
                           Adjustment adjustment = Adjustment::None, const Vec& r_hat = {},
                           const CarotParams& carot_params = {});

}  // namespace mipll
