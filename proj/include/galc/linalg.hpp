#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "galc/error.hpp"
#include "galc/kernels.hpp"

namespace galc {

/// Dense row-major double matrix for the statistics side of the pipeline.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(const std::vector<double>& d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double trace() const {
        double t = 0;
        for (std::size_t i = 0; i < std::min(rows, cols); ++i) t += (*this)(i, i);
        return t;
    }

    double frobenius() const {
        double s = 0;
        for (double v : data) s += v * v;
        return std::sqrt(s);
    }

    Matrix transposed() const {
        Matrix t(cols, rows);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) fail(Errc::dimension_mismatch, "matrix product dimension mismatch");
    Matrix c(a.rows, b.cols);
    kernels::gemm_nn(a.rows, b.cols, a.cols, a.data.data(), b.data.data(), c.data.data());
    return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) fail(Errc::dimension_mismatch, "matrix difference dimension mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

/// (A + Aᵀ) / 2
inline Matrix symmetrized(const Matrix& a) {
    Matrix s = a;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = i + 1; j < a.cols; ++j) s(i, j) = s(j, i) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

inline void require_symmetric(const Matrix& a, double tol) {
    if (a.rows != a.cols) fail(Errc::not_symmetric, "matrix is not square");
    double scale = 1.0;
    for (double v : a.data) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = i + 1; j < a.cols; ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol * scale)
                fail(Errc::not_symmetric, "entries (" + std::to_string(i) + "," + std::to_string(j) + ") differ");
}

struct EigenSystem {
    std::vector<double> values;
    Matrix vectors;  // column i pairs with values[i]
    int sweeps = 0;
};

inline constexpr int kJacobiMaxSweeps = 50;

namespace detail {

// Round-robin pairing of n indices: every unordered pair appears exactly once
// over the rounds, and the pairs within one round are disjoint.
inline std::vector<std::vector<std::pair<std::size_t, std::size_t>>> jacobi_rounds(std::size_t n) {
    const std::size_t m = n + (n % 2);  // index n is a bye when n is odd
    std::vector<std::size_t> ring(m);
    for (std::size_t i = 0; i < m; ++i) ring[i] = i;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rounds;
    for (std::size_t r = 0; r + 1 < m; ++r) {
        std::vector<std::pair<std::size_t, std::size_t>> round;
        for (std::size_t i = 0; i < m / 2; ++i) {
            std::size_t p = ring[i], q = ring[m - 1 - i];
            if (p > q) std::swap(p, q);
            if (q < n) round.emplace_back(p, q);
        }
        rounds.push_back(std::move(round));
        std::rotate(ring.begin() + 1, ring.end() - 1, ring.end());
    }
    return rounds;
}

struct JacobiRotation {
    std::size_t p, q;
    double c, s, t, apq, app, aqq;
};

}  // namespace detail

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Each sweep visits
/// every off-diagonal pair once, in round-robin order; the rotations of one
/// round touch disjoint rows and columns, so they are applied together.
inline EigenSystem jacobi_eigen(const Matrix& input, int max_sweeps = kJacobiMaxSweeps) {
    require_symmetric(input, 1e-8);
    const std::size_t n = input.rows;
    Matrix a = symmetrized(input);
    // Rows of vt are eigenvectors, so rotations touch contiguous memory.
    Matrix vt = Matrix::identity(n);
    const double norm = a.frobenius();
    const auto rounds = detail::jacobi_rounds(n);

    EigenSystem out;
    std::vector<detail::JacobiRotation> rots;
    for (int sweep = 0;; ++sweep) {
        double off = 0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        off = std::sqrt(off);
        if (off <= 1e-15 * norm || off == 0.0) {
            out.sweeps = sweep;
            break;
        }
        if (sweep == max_sweeps)
            fail(Errc::no_convergence, "Jacobi did not converge in " + std::to_string(max_sweeps) + " sweeps");

        for (const auto& round : rounds) {
            rots.clear();
            for (auto [p, q] : round) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double app = a(p, p), aqq = a(q, q);
                // Skip rotations whose effect is below rounding of both diagonals.
                if (sweep > 3 && std::abs(apq) * 1e17 < std::abs(app) && std::abs(apq) * 1e17 < std::abs(aqq)) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                rots.push_back({p, q, c, t * c, t, apq, app, aqq});
            }
            if (rots.empty()) continue;

            auto rotate_rows = [n](Matrix& m, const detail::JacobiRotation& r) {
                double* rp = &m.data[r.p * n];
                double* rq = &m.data[r.q * n];
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = rp[k], y = rq[k];
                    rp[k] = r.c * x - r.s * y;
                    rq[k] = r.s * x + r.c * y;
                }
            };
            for (const auto& r : rots) {
                rotate_rows(a, r);
                rotate_rows(vt, r);
            }
            for (std::size_t k = 0; k < n; ++k) {
                double* row = &a.data[k * n];
                for (const auto& r : rots) {
                    const double x = row[r.p], y = row[r.q];
                    row[r.p] = r.c * x - r.s * y;
                    row[r.q] = r.s * x + r.c * y;
                }
            }
            for (const auto& r : rots) {
                // Pin the rotated 2x2 block to its exact form.
                a(r.p, r.p) = r.app - r.t * r.apq;
                a(r.q, r.q) = r.aqq + r.t * r.apq;
                a(r.p, r.q) = a(r.q, r.p) = 0.0;
            }
        }
    }
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
    out.vectors = vt.transposed();
    return out;
}

/// Symmetric square root of a symmetric PSD matrix. Negative eigenvalues from
/// rounding are clamped to zero.
inline Matrix sqrtm_psd(const Matrix& a) {
    const auto eig = jacobi_eigen(a);
    const std::size_t n = a.rows;
    // S = V · diag(√λ) · Vᵀ, built as Σ_i √λ_i v_i v_iᵀ over rows of Vᵀ.
    Matrix scaled(n, n);  // row i: √λ_i · v_iᵀ
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::sqrt(std::max(eig.values[i], 0.0));
        for (std::size_t k = 0; k < n; ++k) scaled(i, k) = r * eig.vectors(k, i);
    }
    Matrix vt = eig.vectors.transposed();
    Matrix s(n, n);
    kernels::gemm_tn(n, n, n, vt.data.data(), scaled.data.data(), s.data.data());
    return symmetrized(s);
}

}  // namespace galc
