#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mipll/errors.hpp"

namespace mipll {

using Vec = std::vector<double>;

// Dense row-major matrix. Everything in this toolkit is desk scale, so no
// attempt is made at blocking or expression templates.
struct Matrix {
    int rows = 0;
    int cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    Vec row(int r) const {
        return Vec(data.begin() + static_cast<std::ptrdiff_t>(r) * cols,
                   data.begin() + static_cast<std::ptrdiff_t>(r + 1) * cols);
    }
    void set_row(int r, const Vec& v) {
        for (int c = 0; c < cols; ++c) (*this)(r, c) = v[c];
    }
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l1_norm(const Vec& a) {
    double s = 0.0;
    for (double x : a) s += std::fabs(x);
    return s;
}

inline double l2_norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double linf_norm(const Vec& a) {
    double s = 0.0;
    for (double x : a) s = std::max(s, std::fabs(x));
    return s;
}

inline double sum(const Vec& a) {
    double s = 0.0;
    for (double x : a) s += x;
    return s;
}

inline Vec matvec(const Matrix& m, const Vec& x) {
    Vec y(m.rows, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        double s = 0.0;
        const double* row = &m.data[static_cast<std::size_t>(r) * m.cols];
        for (int c = 0; c < m.cols; ++c) s += row[c] * x[c];
        y[r] = s;
    }
    return y;
}

// x^T M y for square M.
inline double quad_form(const Matrix& m, const Vec& x) {
    double s = 0.0;
    for (int r = 0; r < m.rows; ++r) {
        const double* row = &m.data[static_cast<std::size_t>(r) * m.cols];
        double acc = 0.0;
        for (int c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        s += x[r] * acc;
    }
    return s;
}

inline Vec softmax(const Vec& u) {
    double mx = u[0];
    for (double x : u) mx = std::max(mx, x);
    Vec out(u.size());
    double z = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        out[i] = std::exp(u[i] - mx);
        z += out[i];
    }
    for (double& x : out) x /= z;
    return out;
}

// Euclidean projection onto the probability simplex (Held et al.).
Vec project_to_simplex(const Vec& v);

// Index of the largest entry; ties resolved toward the lowest index.
inline int argmax_lowest(const Vec& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

inline void check_simplex(const Vec& r, const char* what, double tol = 1e-9) {
    require(!r.empty(), ErrorCode::EmptyInput, std::string(what) + " is empty");
    double s = 0.0;
    for (double x : r) {
        require(x >= -tol, ErrorCode::InvalidArgument, std::string(what) + " has a negative entry");
        s += x;
    }
    require(std::fabs(s - 1.0) <= 1e-6, ErrorCode::InvalidArgument,
            std::string(what) + " does not sum to 1");
}

}  // namespace mipll
