// Small dense linear algebra used across the lab.  Everything here is sized
// for prompts of a few hundred tokens and feature dimensions below ten, so a
// plain row-major buffer beats pulling in a matrix library.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stllab {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec sub(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sub: size mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Vec row(std::size_t r) const {
        return Vec(a.begin() + static_cast<std::ptrdiff_t>(r * cols),
                   a.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    }
};

inline Mat matmul(const Mat& x, const Mat& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matmul: shape mismatch");
    Mat out(x.rows, y.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t k = 0; k < x.cols; ++k) {
            const double v = x(i, k);
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < y.cols; ++j) out(i, j) += v * y(k, j);
        }
    }
    return out;
}

// x * y^T
inline Mat matmul_nt(const Mat& x, const Mat& y) {
    if (x.cols != y.cols) throw std::invalid_argument("matmul_nt: shape mismatch");
    Mat out(x.rows, y.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < y.rows; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < x.cols; ++k) s += x(i, k) * y(j, k);
            out(i, j) = s;
        }
    return out;
}

inline Vec mat_vec(const Mat& m, const Vec& v) {
    if (m.cols != v.size()) throw std::invalid_argument("mat_vec: shape mismatch");
    Vec out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

// Solves A x = b for symmetric positive definite A via Cholesky.
// Throws std::runtime_error when a pivot is not strictly positive.
inline Vec cholesky_solve(Mat A, Vec b) {
    const std::size_t n = A.rows;
    if (A.cols != n || b.size() != n) throw std::invalid_argument("cholesky_solve: shape");
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            const double ljk = A(j, k);
            for (std::size_t i = j; i < n; ++i) A(i, j) -= A(i, k) * ljk;
        }
        const double d = A(j, j);
        if (!(d > 0.0) || !std::isfinite(d))
            throw std::runtime_error("cholesky_solve: matrix not positive definite");
        const double inv = 1.0 / std::sqrt(d);
        for (std::size_t i = j; i < n; ++i) A(i, j) *= inv;
    }
    // forward substitution L y = b
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= A(i, k) * b[k];
        b[i] = s / A(i, i);
    }
    // back substitution L^T x = y
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= A(k, ii) * b[k];
        b[ii] = s / A(ii, ii);
    }
    return b;
}

// Spectral norm (largest singular value) by power iteration on A^T A.
// Fixed budget: `max_iters` rounds or relative change below `tol`.
inline double spectral_norm(const Mat& m, int max_iters = 200, double tol = 1e-12) {
    if (m.rows == 0 || m.cols == 0) return 0.0;
    Vec v(m.cols);
    // deterministic, non-degenerate start direction
    for (std::size_t i = 0; i < m.cols; ++i)
        v[i] = 1.0 + 0.25 * static_cast<double>(i % 7) / 7.0;
    double nv = norm2(v);
    for (auto& x : v) x /= nv;

    double est = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        // w = A^T (A v)
        Vec av(m.rows, 0.0);
        for (std::size_t i = 0; i < m.rows; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
            av[i] = s;
        }
        Vec w(m.cols, 0.0);
        for (std::size_t i = 0; i < m.rows; ++i) {
            const double s = av[i];
            for (std::size_t j = 0; j < m.cols; ++j) w[j] += m(i, j) * s;
        }
        const double nw = norm2(w);
        if (nw == 0.0) return 0.0;  // v landed in the null space of A
        const double next = std::sqrt(nw);
        for (std::size_t j = 0; j < m.cols; ++j) v[j] = w[j] / nw;
        if (it > 0 && std::abs(next - est) <= tol * std::max(1.0, next)) return next;
        est = next;
    }
    return est;
}

}  // namespace stllab
