#include <doctest.h>

#include <cmath>

#include "mipll/bounds.hpp"
#include "mipll/harness.hpp"
#include "mipll/marginal.hpp"
#include "mipll/rng.hpp"
#include "oracles.hpp"

using namespace mipll;

TEST_CASE("long-tail profile") {
    Vec balanced = long_tail_marginal(4, 0.0);
    for (double x : balanced) CHECK(x == doctest::Approx(0.25));

    Vec degenerate = long_tail_marginal(5, 1.0);
    for (double x : degenerate) CHECK(x == doctest::Approx(0.2));

    Vec tail = long_tail_marginal(3, 9.0);
    CHECK(tail[0] == doctest::Approx(9.0 / 13).epsilon(1e-12));
    CHECK(tail[1] == doctest::Approx(3.0 / 13).epsilon(1e-12));
    CHECK(tail[2] == doctest::Approx(1.0 / 13).epsilon(1e-12));
    CHECK(tail[0] / tail[2] == doctest::Approx(9.0).epsilon(1e-12));

    CHECK_THROWS_AS(long_tail_marginal(3, 0.5), Error);
}

TEST_CASE("noise-free features sit exactly on the class means") {
    SyntheticConfig cfg;
    cfg.c = 3;
    cfg.d = 4;
    cfg.m = 2;
    cfg.noise_std = 0.0;
    cfg.m_partial = 20;
    cfg.m_test = 10;
    cfg.seed = 5;
    auto spec = TransitionSpec::max_of(2, 3);
    Dataset data = gen_dataset(cfg, spec);
    for (const auto& point : data.test) {
        CHECK(point.x[point.y] == doctest::Approx(cfg.mean_scale));
        for (int f = 0; f < cfg.d; ++f)
            if (f != point.y) CHECK(point.x[f] == doctest::Approx(0.0));
    }
}

TEST_CASE("partial labels come from the hidden gold labels") {
    SyntheticConfig cfg;
    cfg.c = 4;
    cfg.d = 4;
    cfg.m = 2;
    cfg.noise_std = 0.0;
    cfg.m_partial = 100;
    cfg.m_test = 10;
    cfg.seed = 7;
    auto spec = TransitionSpec::max_of(2, 4);
    Dataset data = gen_dataset(cfg, spec);
    for (const auto& sample : data.train) {
        std::vector<int> gold;
        for (const auto& x : sample.x) {
            int label = argmax_lowest(x);  // noise-free features reveal the label
            gold.push_back(label);
        }
        CHECK(spec.eval(gold) == sample.s);
    }
}

TEST_CASE("generated label frequencies follow the marginal") {
    SyntheticConfig cfg;
    cfg.c = 5;
    cfg.d = 5;
    cfg.m = 2;
    cfg.rho = 15.0;
    cfg.m_partial = 10;
    cfg.m_test = 100000;
    cfg.seed = 11;
    auto spec = TransitionSpec::max_of(2, 5);
    Dataset data = gen_dataset(cfg, spec);
    Vec freq(5, 0.0);
    for (const auto& point : data.test) freq[point.y] += 1.0;
    for (double& f : freq) f /= data.test.size();
    for (int j = 0; j < 5; ++j) CHECK(std::fabs(freq[j] - data.marginal[j]) < 0.01);
}

TEST_CASE("balanced max partial histogram approaches the forward map") {
    SyntheticConfig cfg;
    cfg.c = 10;
    cfg.d = 10;
    cfg.m = 2;
    cfg.rho = 0.0;
    cfg.m_partial = 60000;
    cfg.m_test = 10;
    cfg.seed = 13;
    auto spec = TransitionSpec::max_of(2, 10);
    Dataset data = gen_dataset(cfg, spec);
    std::vector<PartialLabel> partials;
    for (const auto& sample : data.train) partials.push_back(sample.s);
    Vec hist = empirical_partial_hist(partials, spec);
    Vec expected = forward_map(spec, Vec(10, 0.1));
    CHECK(expected[0] == doctest::Approx(0.01).epsilon(1e-12));
    for (int s = 0; s < 10; ++s) CHECK(std::fabs(hist[s] - expected[s]) < 0.01);
}

TEST_CASE("feature dimension must cover the classes") {
    SyntheticConfig cfg;
    cfg.c = 4;
    cfg.d = 3;
    auto spec = TransitionSpec::max_of(2, 4);
    CHECK_THROWS_AS(gen_dataset(cfg, spec), Error);
}

TEST_CASE("semantic loss on singleton and one-hot inputs") {
    auto spec = TransitionSpec::max_of(2, 3);
    Vec f1{0.5, 0.3, 0.2}, f2{0.4, 0.4, 0.2};
    auto res = semantic_loss({f1, f2}, spec, PartialLabel{std::int64_t{0}});
    CHECK(res.loss == doctest::Approx(-std::log(0.5 * 0.4)).epsilon(1e-12));

    // One-hot scores concentrated on a pre-image vector: zero loss.
    Vec a{0.0, 1.0, 0.0}, b{1.0, 0.0, 0.0};
    auto zero = semantic_loss({a, b}, spec, PartialLabel{std::int64_t{1}});
    CHECK(zero.loss == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("semantic loss gradient matches finite differences") {
    auto spec = TransitionSpec::max_of(2, 3);
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        Vec f1 = rng.dirichlet_uniform(3);
        Vec f2 = rng.dirichlet_uniform(3);
        for (Vec* f : {&f1, &f2}) {
            for (double& x : *f) x = 0.05 + 0.9 * x;
            double z = sum(*f);
            for (double& x : *f) x /= z;
        }
        int s = static_cast<int>(rng.uniform() * 3);
        PartialLabel label{static_cast<std::int64_t>(s)};
        auto res = semantic_loss({f1, f2}, spec, label);

        for (int slot = 0; slot < 2; ++slot) {
            Vec base = slot == 0 ? f1 : f2;
            for (int j = 0; j < 3; ++j) {
                const double h = 1e-5;
                Vec lo = base, hi = base;
                lo[j] -= h;
                hi[j] += h;
                auto f_lo = semantic_loss({slot == 0 ? lo : f1, slot == 1 ? lo : f2}, spec, label);
                auto f_hi = semantic_loss({slot == 0 ? hi : f1, slot == 1 ? hi : f2}, spec, label);
                double numeric = (f_hi.loss - f_lo.loss) / (2 * h);
                double scale = std::max(1.0, std::fabs(numeric));
                CHECK(std::fabs(res.grad[slot][j] - numeric) / scale < 1e-5);
            }
        }
    }
}

TEST_CASE("semantic-loss training separates a noise-free dataset") {
    SyntheticConfig cfg;
    cfg.c = 4;
    cfg.d = 4;
    cfg.m = 2;
    cfg.noise_std = 0.0;
    cfg.m_partial = 200;
    cfg.m_test = 200;
    cfg.seed = 19;
    auto spec = TransitionSpec::max_of(2, 4);
    Dataset data = gen_dataset(cfg, spec);

    TrainConfig tc;
    tc.method = TrainMethod::SemanticLoss;
    tc.epochs = 50;
    tc.seed = 1;
    auto result = train(data, spec, tc);
    CHECK(result.history.back().partial_acc >= 0.99);
    CHECK(result.history.back().test_acc >= 0.99);
}

TEST_CASE("singleton-only batches make ILP coincide with supervised training") {
    // Max with every gold pair (0,0): all partial labels are the singleton 0,
    // so the LP forces one-hot pseudo-labels and the gradient equals the
    // supervised cross-entropy gradient, which is also the semantic-loss
    // gradient here.
    auto spec = TransitionSpec::max_of(2, 3);
    SyntheticConfig cfg;
    cfg.c = 3;
    cfg.d = 3;
    cfg.m = 2;
    cfg.noise_std = 0.7;
    cfg.m_partial = 40;
    cfg.m_test = 30;
    cfg.seed = 23;
    Dataset data = gen_dataset(cfg, spec);
    for (auto& sample : data.train) sample.s = PartialLabel{std::int64_t{0}};  // forces (0,0)

    TrainConfig sl;
    sl.method = TrainMethod::SemanticLoss;
    sl.epochs = 5;
    sl.seed = 3;
    TrainConfig ilp = sl;
    ilp.method = TrainMethod::IlpPseudoLabel;
    ilp.eps_frac = 1.0;

    auto a = train(data, spec, sl);
    auto b = train(data, spec, ilp);
    CHECK(b.lp_fallbacks == 0);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
        CHECK(a.history[e].partial_acc == doctest::Approx(b.history[e].partial_acc));
        CHECK(std::fabs(a.history[e].test_acc - b.history[e].test_acc) < 1e-9);
    }
}

TEST_CASE("training is deterministic under a fixed seed") {
    SyntheticConfig cfg;
    cfg.c = 3;
    cfg.d = 3;
    cfg.m = 2;
    cfg.noise_std = 1.0;
    cfg.m_partial = 60;
    cfg.m_test = 40;
    cfg.seed = 29;
    auto spec = TransitionSpec::max_of(2, 3);
    Dataset data = gen_dataset(cfg, spec);

    TrainConfig tc;
    tc.method = TrainMethod::IlpPseudoLabel;
    tc.rhat_source = RhatSource::Algorithm1;
    tc.epochs = 4;
    tc.seed = 31;
    auto a = train(data, spec, tc);
    auto b = train(data, spec, tc);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
        CHECK(a.history[e].partial_acc == b.history[e].partial_acc);
        CHECK(a.history[e].test_acc == b.history[e].test_acc);
        for (int j = 0; j < 3; ++j) {
            double pa = a.history[e].per_class_acc[j], pb = b.history[e].per_class_acc[j];
            CHECK(((std::isnan(pa) && std::isnan(pb)) || pa == pb));
        }
    }
}

TEST_CASE("evaluation report basics") {
    // Perfect scores.
    Matrix perfect(4, 2, 0.0);
    std::vector<int> gold{0, 1, 0, 1};
    for (int k = 0; k < 4; ++k) perfect(k, gold[k]) = 1.0;
    auto rep = evaluate_scores(perfect, gold, 2);
    CHECK(rep.accuracy == doctest::Approx(1.0));
    CHECK(rep.per_class_acc[0] == doctest::Approx(1.0));
    CHECK(rep.per_class_acc[1] == doctest::Approx(1.0));

    // Constant prediction: accuracy equals that class's frequency.
    Matrix constant(4, 2, 0.0);
    for (int k = 0; k < 4; ++k) constant(k, 0) = 1.0;
    auto rep2 = evaluate_scores(constant, {0, 1, 1, 1}, 2);
    CHECK(rep2.accuracy == doctest::Approx(0.25));

    // Confusion rows are distributions over predictions.
    for (int i = 0; i < 2; ++i) {
        double s = 0.0;
        for (int j = 0; j < 2; ++j) s += rep2.confusion(i, j);
        CHECK(s == doctest::Approx(1.0));
    }

    // Zero-support classes are NaN with zero support count.
    auto rep3 = evaluate_scores(constant, {0, 0, 0, 0}, 2);
    CHECK(std::isnan(rep3.per_class_acc[1]));
    CHECK(rep3.support[1] == 0);
}

TEST_CASE("prior-biased scores regain minority predictions under carot") {
    // Decent scores multiplied by a skewed prior and renormalized: raw
    // argmax starves the minority class; adjustment with the gold marginal
    // recovers it.
    const int c = 3;
    Vec r{0.2, 0.2, 0.6};  // class 2 is actually frequent
    Rng rng(41);
    const int n = 300;
    Matrix scores(n, c, 0.0);
    std::vector<int> gold(n);
    Vec skew{0.70, 0.25, 0.05};  // prior bias crushing class 2
    for (int k = 0; k < n; ++k) {
        gold[k] = rng.categorical(r);
        Vec row(c, 0.0);
        for (int j = 0; j < c; ++j) row[j] = (j == gold[k]) ? 0.55 : 0.225;
        double z = 0.0;
        for (int j = 0; j < c; ++j) {
            row[j] *= skew[j];
            z += row[j];
        }
        for (int j = 0; j < c; ++j) scores(k, j) = row[j] / z;
    }
    auto raw_preds = row_argmax(scores);
    auto adj = carot_adjust(scores, r, CarotParams{0.05, 10.0, 500});
    auto carot_preds = row_argmax(adj.b);
    int raw_minority = 0, carot_minority = 0;
    for (int k = 0; k < n; ++k) {
        raw_minority += raw_preds[k] == 2 ? 1 : 0;
        carot_minority += carot_preds[k] == 2 ? 1 : 0;
    }
    CHECK(carot_minority > raw_minority);

    auto rep_raw = evaluate_scores(scores, gold, c);
    auto rep_adj = evaluate_scores(scores, gold, c, Adjustment::Carot, r, CarotParams{0.05, 10.0, 500});
    CHECK(rep_adj.per_class_acc[2] > rep_raw.per_class_acc[2]);
}

TEST_CASE("trained models satisfy the class-risk bound end to end") {
    SyntheticConfig cfg;
    cfg.c = 3;
    cfg.d = 3;
    cfg.m = 2;
    cfg.noise_std = 1.6;  // imperfect on purpose
    cfg.m_partial = 300;
    cfg.m_test = 600;
    cfg.seed = 43;
    auto spec = TransitionSpec::max_of(2, 3);
    Dataset data = gen_dataset(cfg, spec);

    TrainConfig tc;
    tc.method = TrainMethod::SemanticLoss;
    tc.epochs = 30;
    tc.seed = 7;
    auto result = train(data, spec, tc);
    auto report = evaluate(result.model, data.test, 3);

    auto sm = build_sigma(spec, data.marginal);
    Vec h(9, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int jp = 0; jp < 3; ++jp) h[vec_index(3, i, jp)] = report.confusion(i, jp);
    double risk_p = partial_risk_quadratic(sm, h);
    BoundSolverConfig bc;
    bc.seed = 17;
    for (int j = 0; j < 3; ++j) {
        double measured = 1.0 - report.confusion(j, j);
        auto bound = solve_class_bound(sm, j, risk_p, bc);
        CHECK(measured <= bound.value + 0.05);
    }
}
