#include "mipll/carot.hpp"

#include <cmath>

namespace mipll {

namespace {

constexpr double kScoreFloor = 1e-12;
constexpr double kMarginalFloor = 1e-9;

Vec clamp_marginal(const Vec& r_hat) {
    Vec r = r_hat;
    double total = 0.0;
    for (double& x : r) {
        x = std::max(x, kMarginalFloor);
        total += x;
    }
    for (double& x : r) x /= total;
    return r;
}

Matrix log_scores(const Matrix& scores) {
    Matrix lp(scores.rows, scores.cols);
    for (std::size_t k = 0; k < scores.data.size(); ++k)
        lp.data[k] = std::log(std::max(scores.data[k], kScoreFloor));
    return lp;
}

}  // namespace

Matrix b_matrix(const Matrix& scores, const Vec& u, const Vec& v, double eta) {
    require(eta > 0.0, ErrorCode::InvalidArgument, "eta must be positive");
    require(static_cast<int>(u.size()) == scores.rows && static_cast<int>(v.size()) == scores.cols,
            ErrorCode::ShapeError, "potential lengths do not match the score matrix");
    Matrix lp = log_scores(scores);
    Matrix b(scores.rows, scores.cols);
    for (int i = 0; i < scores.rows; ++i)
        for (int j = 0; j < scores.cols; ++j) b(i, j) = std::exp(u[i] + v[j] + lp(i, j) / eta);
    return b;
}

AdjustedScores carot_adjust(const Matrix& scores, const Vec& r_hat, const CarotParams& params) {
    require(scores.rows >= 1 && scores.cols >= 1, ErrorCode::EmptyInput, "empty score matrix");
    require(params.eta > 0.0 && params.tau > 0.0, ErrorCode::InvalidArgument,
            "eta and tau must be positive");
    require(params.iterations >= 2, ErrorCode::InvalidArgument, "need at least two iterations");
    require(static_cast<int>(r_hat.size()) == scores.cols, ErrorCode::ShapeError,
            "marginal length does not match the score matrix");

    const int n = scores.rows, c = scores.cols;
    const double eta = params.eta, tau = params.tau;
    Vec r = clamp_marginal(r_hat);
    Matrix lp = log_scores(scores);

    // Potentials are kept in the scale where B = exp((U_i + V_j + log P_ij)
    // / eta); the u update is then exactly row renormalization in log space,
    // and the v fixed point matches the stationarity condition of the
    // marginal term. The returned potentials are divided by eta so that
    // b_matrix reproduces the same matrix.
    Vec cap_u(n, 0.0), cap_v(c, 0.0);
    Vec log_nr(c);
    for (int j = 0; j < c; ++j) log_nr[j] = std::log(static_cast<double>(n) * r[j]);

    auto row_log_sums = [&](Vec& out) {
        for (int i = 0; i < n; ++i) {
            double mx = -1e300;
            for (int j = 0; j < c; ++j) mx = std::max(mx, (cap_u[i] + cap_v[j] + lp(i, j)) / eta);
            double acc = 0.0;
            for (int j = 0; j < c; ++j) acc += std::exp((cap_u[i] + cap_v[j] + lp(i, j)) / eta - mx);
            out[i] = mx + std::log(acc);
        }
    };
    auto col_log_sums = [&](Vec& out) {
        for (int j = 0; j < c; ++j) {
            double mx = -1e300;
            for (int i = 0; i < n; ++i) mx = std::max(mx, (cap_u[i] + cap_v[j] + lp(i, j)) / eta);
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += std::exp((cap_u[i] + cap_v[j] + lp(i, j)) / eta - mx);
            out[j] = mx + std::log(acc);
        }
    };

    Vec log_a(n), log_b(c);
    for (int iter = 1; iter <= params.iterations; ++iter) {
        row_log_sums(log_a);
        col_log_sums(log_b);
        if (iter % 2 == 0) {
            double w = eta * tau / (eta + tau);
            for (int j = 0; j < c; ++j) cap_v[j] = w * (cap_v[j] / eta + log_nr[j] - log_b[j]);
        } else {
            for (int i = 0; i < n; ++i) cap_u[i] -= eta * log_a[i];
        }
        for (double x : cap_u)
            require(std::isfinite(x), ErrorCode::NumericalFailure, "row potential diverged");
        for (double x : cap_v)
            require(std::isfinite(x), ErrorCode::NumericalFailure, "column potential diverged");
    }
    // Trailing row renormalization so the output is row-stochastic.
    row_log_sums(log_a);
    for (int i = 0; i < n; ++i) cap_u[i] -= eta * log_a[i];

    AdjustedScores out;
    out.u.assign(n, 0.0);
    out.v.assign(c, 0.0);
    for (int i = 0; i < n; ++i) out.u[i] = cap_u[i] / eta;
    for (int j = 0; j < c; ++j) out.v[j] = cap_v[j] / eta;
    out.b = Matrix(n, c);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) out.b(i, j) = std::exp(out.u[i] + out.v[j] + lp(i, j) / eta);
    return out;
}

double rsot_objective(const Matrix& b, const Matrix& scores, const Vec& r_hat, double eta,
                      double tau) {
    require(b.rows == scores.rows && b.cols == scores.cols, ErrorCode::ShapeError,
            "matrix shapes differ");
    const int n = b.rows, c = b.cols;
    Vec r = clamp_marginal(r_hat);
    Matrix lp = log_scores(scores);
    double transport = 0.0, entropy = 0.0;
    Vec col(c, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) {
            double x = b(i, j);
            transport += -lp(i, j) * x;
            if (x > 0.0) entropy -= x * std::log(x);
            col[j] += x;
        }
    double kl = 0.0;
    for (int j = 0; j < c; ++j) {
        double target = n * r[j];
        if (col[j] > 0.0) kl += col[j] * std::log(col[j] / target);
        kl += target - col[j];
    }
    return transport + tau * kl - eta * entropy;
}

std::vector<int> row_argmax(const Matrix& scores) {
    std::vector<int> out(scores.rows);
    for (int i = 0; i < scores.rows; ++i) {
        Vec row = scores.row(i);
        out[i] = argmax_lowest(row);
    }
    return out;
}

std::vector<int> logit_adjust(const Matrix& scores, const Vec& r_hat) {
    require(static_cast<int>(r_hat.size()) == scores.cols, ErrorCode::ShapeError,
            "marginal length does not match the score matrix");
    Vec r = clamp_marginal(r_hat);
    std::vector<int> out(scores.rows);
    for (int i = 0; i < scores.rows; ++i) {
        Vec adjusted(scores.cols);
        for (int j = 0; j < scores.cols; ++j)
            adjusted[j] = std::log(std::max(scores(i, j), kScoreFloor)) - std::log(r[j]);
        out[i] = argmax_lowest(adjusted);
    }
    return out;
}

TuneResult tune_carot(const std::vector<Matrix>& val_scores,
                      const std::vector<PartialLabel>& partials, const TransitionSpec& spec,
                      const Vec& eta_grid, const Vec& tau_grid, const Vec& r_hat, int iterations) {
    require(!eta_grid.empty() && !tau_grid.empty(), ErrorCode::EmptyInput, "empty tuning grid");
    require(!partials.empty(), ErrorCode::EmptyInput, "empty validation set");
    const int m = spec.arity();
    require(static_cast<int>(val_scores.size()) == m, ErrorCode::ShapeError,
            "expected one validation score matrix per instance slot");
    const int n = static_cast<int>(partials.size());
    for (const auto& p : val_scores)
        require(p.rows == n && p.cols == spec.num_classes(), ErrorCode::ShapeError,
                "validation score shape mismatch");

    TuneResult best;
    bool have_best = false;
    for (double eta : eta_grid)
        for (double tau : tau_grid) {
            CarotParams params{eta, tau, iterations};
            std::vector<std::vector<int>> preds;
            preds.reserve(m);
            for (int i = 0; i < m; ++i)
                preds.push_back(row_argmax(carot_adjust(val_scores[i], r_hat, params).b));
            int hits = 0;
            std::vector<int> labels(m);
            for (int l = 0; l < n; ++l) {
                for (int i = 0; i < m; ++i) labels[i] = preds[i][l];
                if (spec.eval(labels) == partials[l]) ++hits;
            }
            double acc = static_cast<double>(hits) / n;
            bool better = !have_best || acc > best.partial_accuracy ||
                          (acc == best.partial_accuracy &&
                           (tau > best.tau || (tau == best.tau && eta > best.eta)));
            if (better) {
                best = TuneResult{eta, tau, acc};
                have_best = true;
            }
        }
    return best;
}

}  // namespace mipll
