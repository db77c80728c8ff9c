#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "sca/matrix.hpp"

namespace sca {

struct SymEig {
    std::vector<double> values; // descending
    Matrix vectors;             // column j pairs with values[j]
};

/// Cyclic two-sided Jacobi for symmetric matrices. Stops when the off-diagonal
/// Frobenius mass drops below 1e-12 x the input norm.
inline SymEig jacobi_eigen(const Matrix& g) {
    if (g.rows() != g.cols())
        throw contract_error("jacobi_eigen: matrix not square: " + shape_str(g));
    const std::size_t n = g.rows();
    Matrix a = g;
    Matrix v = Matrix::identity(n);
    const double tol = 1e-12 * frobenius_norm(g);

    auto off_mass = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    const int max_sweeps = 100;
    int sweep = 0;
    while (off_mass() > tol) {
        if (++sweep > max_sweeps)
            throw numeric_error("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) + " sweeps");
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(p, i) = a(i, p);
                    a(i, q) = s * aip + c * aiq;
                    a(q, i) = a(i, q);
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymEig out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

namespace detail {

inline void check_rank_range(const Matrix& y, std::size_t k, const char* who) {
    if (y.rows() == 0 || y.cols() == 0)
        throw contract_error(std::string(who) + ": empty matrix " + shape_str(y));
    const std::size_t lim = std::min(y.rows(), y.cols());
    if (k < 1 || k > lim)
        throw contract_error(std::string(who) + ": k=" + std::to_string(k) +
                             " out of range [1, " + std::to_string(lim) + "] for " + shape_str(y));
}

/// Spectrum of the smaller Gram matrix (Y^T Y or Y Y^T).
inline SymEig gram_eigen(const Matrix& y, bool* gram_over_cols = nullptr) {
    const bool use_cols = y.cols() <= y.rows();
    if (gram_over_cols) *gram_over_cols = use_cols;
    Matrix g = use_cols ? matmul(transpose(y), y) : matmul(y, transpose(y));
    return jacobi_eigen(g);
}

} // namespace detail

/// Top k singular values (descending) from the Gram spectrum.
inline std::vector<double> top_k_singular_values(const Matrix& y, std::size_t k) {
    detail::check_rank_range(y, k, "top_k_singular_values");
    SymEig eig = detail::gram_eigen(y);
    std::vector<double> s(k);
    for (std::size_t i = 0; i < k; ++i) s[i] = std::sqrt(std::max(0.0, eig.values[i]));
    return s;
}

/// Frobenius mass outside the best rank-k approximation. The top-k subspace
/// comes from the Gram spectrum; the energy itself is accumulated as a streaming
/// projection residual (O(dim*k) scratch, no N x F temporary), which avoids the
/// cancellation floor of ||y||^2 - sum(sigma^2) on near-exact-rank data.
inline double tail_energy(const Matrix& y, std::size_t k) {
    detail::check_rank_range(y, k, "tail_energy");
    bool over_cols = false;
    SymEig eig = detail::gram_eigen(y, &over_cols);
    const Matrix& v = eig.vectors;

    double acc = 0.0;
    std::vector<double> coef(k);
    if (over_cols) {
        // columns of v span bands; project each pixel row
        for (std::size_t n = 0; n < y.rows(); ++n) {
            const double* yr = y.row(n);
            for (std::size_t j = 0; j < k; ++j) {
                double c = 0.0;
                for (std::size_t f = 0; f < y.cols(); ++f) c += yr[f] * v(f, j);
                coef[j] = c;
            }
            for (std::size_t f = 0; f < y.cols(); ++f) {
                double rec = 0.0;
                for (std::size_t j = 0; j < k; ++j) rec += coef[j] * v(f, j);
                const double d = yr[f] - rec;
                acc += d * d;
            }
        }
    } else {
        // columns of v span pixels; project each band column
        for (std::size_t f = 0; f < y.cols(); ++f) {
            for (std::size_t j = 0; j < k; ++j) {
                double c = 0.0;
                for (std::size_t n = 0; n < y.rows(); ++n) c += y(n, f) * v(n, j);
                coef[j] = c;
            }
            for (std::size_t n = 0; n < y.rows(); ++n) {
                double rec = 0.0;
                for (std::size_t j = 0; j < k; ++j) rec += coef[j] * v(n, j);
                const double d = y(n, f) - rec;
                acc += d * d;
            }
        }
    }
    return std::sqrt(acc);
}

/// E^T (E E^T)^{-1} for a wide full-row-rank E (rows <= cols).
inline Matrix right_pseudo_inverse(const Matrix& e) {
    if (e.rows() == 0 || e.cols() == 0)
        throw contract_error("right_pseudo_inverse: empty matrix " + shape_str(e));
    if (e.rows() > e.cols())
        throw contract_error("right_pseudo_inverse: needs rows <= cols, got " + shape_str(e));
    const std::size_t k = e.rows();
    Matrix g = matmul(e, transpose(e));
    SymEig eig = jacobi_eigen(g);
    const double lmax = eig.values.front();
    const double lmin = eig.values.back();
    if (!(lmin > 0.0) || lmax / lmin > 1e12)
        throw singular_error("right_pseudo_inverse: rank-deficient gram matrix, condition estimate " +
                             std::to_string(lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity()));
    // G^{-1} = V diag(1/lambda) V^T
    Matrix vs(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) vs(i, j) = eig.vectors(i, j) / eig.values[j];
    Matrix ginv = matmul(vs, transpose(eig.vectors));
    return matmul(transpose(e), ginv);
}

} // namespace sca
