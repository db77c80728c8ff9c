#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "sca/linalg.hpp"
#include "sca/matrix.hpp"

namespace sca {

inline constexpr double kDefaultEpsilon = 1e-8; // activation denominator floor
// Flush threshold for unsquared-norm gradients d||X||/dX = X/||X||. Below it the
// residual is round-off from the matrix products (measured plateau <= ~1e-11 on
// unit-scale data), so the normalized direction is noise at full magnitude; any
// real training residual sits at 1e-4 or above, leaving >= 5 orders of margin.
inline constexpr double kNormFloor = 1e-9;
inline constexpr double kDetRidge = 1e-12;      // ridge on the volume gram before inversion

/// Two-layer tied-size autoencoder: encoder F x K, decoder K x F. Decoder rows
/// are the endmember spectra; 2FK parameters total.
struct ScaWeights {
    Matrix encoder;
    Matrix decoder;
};

struct LossBreakdown {
    double recon = 0.0;  // ||Y - Yhat||_F / sqrt(B)
    double biorth = 0.0; // ||E Etilde - I_K||_F
    double volume = 0.0; // |det(Ehat Ehat^T)|
    double lambda = 0.0;
    double total = 0.0;  // recon + biorth + lambda * volume
};

struct Gradients {
    Matrix d_encoder; // F x K
    Matrix d_decoder; // K x F
};

namespace detail {

inline void validate_model(const Matrix& batch, const ScaWeights& w, const char* who) {
    const std::size_t f = w.encoder.rows(), k = w.encoder.cols();
    if (f == 0 || k == 0)
        throw contract_error(std::string(who) + ": empty encoder " + shape_str(w.encoder));
    if (w.decoder.rows() != k || w.decoder.cols() != f)
        throw contract_error(std::string(who) + ": decoder " + shape_str(w.decoder) +
                             " does not pair with encoder " + shape_str(w.encoder));
    if (batch.rows() == 0 || batch.cols() != f)
        throw contract_error(std::string(who) + ": batch " + shape_str(batch) +
                             " does not match encoder " + shape_str(w.encoder));
}

inline void require_epsilon(double epsilon, const char* who) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw contract_error(std::string(who) + ": epsilon must be positive and finite");
}

/// Shared forward pass; optionally exposes preactivations and row sums for backprop.
inline Matrix abundances(const Matrix& batch, const ScaWeights& w, double epsilon,
                         Matrix* z_out = nullptr, std::vector<double>* srow_out = nullptr) {
    Matrix z = matmul(batch, w.encoder); // B x K
    const std::size_t b = z.rows(), k = z.cols();
    Matrix a(b, k);
    if (srow_out) srow_out->resize(b);
    for (std::size_t n = 0; n < b; ++n) {
        double s = epsilon;
        for (std::size_t j = 0; j < k; ++j) s += std::max(0.0, z(n, j));
        for (std::size_t j = 0; j < k; ++j) a(n, j) = std::max(0.0, z(n, j)) / s;
        if (srow_out) (*srow_out)[n] = s;
    }
    if (z_out) *z_out = std::move(z);
    return a;
}

/// Mean-corrected simplex frame: row 0 all ones, rows 1..K-1 the first K-1
/// decoder rows minus the column mean over all K rows.
inline Matrix simplex_frame(const Matrix& decoder) {
    const std::size_t k = decoder.rows(), f = decoder.cols();
    Matrix ehat(k, f);
    for (std::size_t c = 0; c < f; ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < k; ++r) m += decoder(r, c);
        m /= static_cast<double>(k);
        ehat(0, c) = 1.0;
        for (std::size_t r = 0; r + 1 < k; ++r) ehat(r + 1, c) = decoder(r, c) - m;
    }
    return ehat;
}

} // namespace detail

/// Rectified row normalized onto the simplex: a_k = max(0, z_k) / (sum_j max(0, z_j) + epsilon).
inline std::vector<double> normalized_relu(const std::vector<double>& z, double epsilon) {
    detail::require_epsilon(epsilon, "normalized_relu");
    double s = epsilon;
    for (double v : z) s += std::max(0.0, v);
    std::vector<double> a(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) a[j] = std::max(0.0, z[j]) / s;
    return a;
}

/// Encoder + simplex activation + decoder. Returns (abundances, reconstruction).
inline std::pair<Matrix, Matrix> forward(const Matrix& batch, const ScaWeights& w, double epsilon) {
    detail::validate_model(batch, w, "forward");
    detail::require_epsilon(epsilon, "forward");
    Matrix a = detail::abundances(batch, w, epsilon);
    Matrix yhat = matmul(a, w.decoder);
    return {std::move(a), std::move(yhat)};
}

/// |det(Ehat Ehat^T)| of the mean-corrected simplex frame. Invariant under
/// translating all endmembers and (in exact arithmetic) under which row is
/// dropped from the frame.
inline double volume(const Matrix& decoder) {
    if (decoder.rows() < 2)
        throw contract_error("volume: needs at least 2 members, got " + shape_str(decoder));
    Matrix ehat = detail::simplex_frame(decoder);
    Matrix g = matmul(ehat, transpose(ehat));
    return std::fabs(det(g));
}

inline LossBreakdown loss(const Matrix& batch, const ScaWeights& w, double lambda, double epsilon) {
    detail::validate_model(batch, w, "loss");
    detail::require_epsilon(epsilon, "loss");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw contract_error("loss: lambda must be nonnegative and finite");
    const std::size_t b = batch.rows(), f = batch.cols(), k = w.encoder.cols();

    Matrix a = detail::abundances(batch, w, epsilon);
    Matrix yhat = matmul(a, w.decoder);
    double sq = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double d = batch.data()[i] - yhat.data()[i];
        sq += d * d;
    }
    (void)f;

    Matrix m = matmul(w.decoder, w.encoder); // K x K
    for (std::size_t j = 0; j < k; ++j) m(j, j) -= 1.0;

    LossBreakdown out;
    out.recon = std::sqrt(sq) / std::sqrt(static_cast<double>(b));
    out.biorth = frobenius_norm(m);
    out.volume = volume(w.decoder);
    out.lambda = lambda;
    out.total = out.recon + out.biorth + lambda * out.volume;
    return out;
}

/// Analytic gradient of the total loss w.r.t. both weight matrices.
///
/// Unsquared norms: d||X||/dX = X / ||X||, clamped at kNormFloor and flushed to
/// exactly zero below it, so round-off-level residuals produce no drift.
/// Volume: d|det G| = |det G| tr(G^{-1} dG) with a kDetRidge ridge on G before
/// inversion; the frame chain rule sends row j of the frame back to decoder row
/// j-1 plus a -1/K mean correction into every decoder row.
inline Gradients backward(const Matrix& batch, const ScaWeights& w, double lambda, double epsilon,
                          LossBreakdown* loss_out = nullptr) {
    detail::validate_model(batch, w, "backward");
    detail::require_epsilon(epsilon, "backward");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw contract_error("backward: lambda must be nonnegative and finite");
    const std::size_t b = batch.rows(), f = batch.cols(), k = w.encoder.cols();
    const double sqrt_b = std::sqrt(static_cast<double>(b));

    Matrix z;
    std::vector<double> srow;
    Matrix a = detail::abundances(batch, w, epsilon, &z, &srow);
    Matrix yhat = matmul(a, w.decoder);

    Matrix diff(b, f); // Y - Yhat
    double sq = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double d = batch.data()[i] - yhat.data()[i];
        diff.data()[i] = d;
        sq += d * d;
    }
    const double nd = std::sqrt(sq);

    Matrix m = matmul(w.decoder, w.encoder);
    for (std::size_t j = 0; j < k; ++j) m(j, j) -= 1.0;
    const double nm = frobenius_norm(m);

    Gradients grad{Matrix(f, k), Matrix(k, f)};

    if (nd >= kNormFloor) {
        // dL/dYhat = -D / (sqrt(B) ||D||)
        Matrix gy(b, f);
        const double inv = -1.0 / (sqrt_b * nd);
        for (std::size_t i = 0; i < gy.size(); ++i) gy.data()[i] = inv * diff.data()[i];

        Matrix d_dec = matmul(transpose(a), gy); // K x F
        for (std::size_t i = 0; i < d_dec.size(); ++i) grad.d_decoder.data()[i] += d_dec.data()[i];

        Matrix ga = matmul(gy, transpose(w.decoder)); // B x K
        // normalized-relu backward per row: g_z = 1{z>0} (g_a - <g_a, a>) / s.
        // Dead units (z <= 0) stay dead.
        Matrix gz(b, k);
        for (std::size_t n = 0; n < b; ++n) {
            double dot = 0.0;
            for (std::size_t j = 0; j < k; ++j) dot += ga(n, j) * a(n, j);
            for (std::size_t j = 0; j < k; ++j)
                gz(n, j) = z(n, j) > 0.0 ? (ga(n, j) - dot) / srow[n] : 0.0;
        }
        Matrix d_enc = matmul(transpose(batch), gz); // F x K
        for (std::size_t i = 0; i < d_enc.size(); ++i) grad.d_encoder.data()[i] += d_enc.data()[i];
    }

    if (nm >= kNormFloor) {
        Matrix gm = m;
        for (std::size_t i = 0; i < gm.size(); ++i) gm.data()[i] /= nm;
        Matrix d_dec = matmul(gm, transpose(w.encoder)); // K x F
        for (std::size_t i = 0; i < d_dec.size(); ++i) grad.d_decoder.data()[i] += d_dec.data()[i];
        Matrix d_enc = matmul(transpose(w.decoder), gm); // F x K
        for (std::size_t i = 0; i < d_enc.size(); ++i) grad.d_encoder.data()[i] += d_enc.data()[i];
    }

    if (k < 2)
        throw contract_error("backward: volume term needs at least 2 members");
    double vol = 0.0;
    {
        Matrix ehat = detail::simplex_frame(w.decoder);
        Matrix g = matmul(ehat, transpose(ehat));
        vol = std::fabs(det(g));
        if (lambda > 0.0) {
            Matrix gr = g;
            for (std::size_t j = 0; j < k; ++j) gr(j, j) += kDetRidge;
            SymEig eig = jacobi_eigen(gr); // PD after ridge
            Matrix vs(k, k);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) vs(i, j) = eig.vectors(i, j) / eig.values[j];
            Matrix ginv = matmul(vs, transpose(eig.vectors));
            Matrix what = matmul(ginv, ehat); // dvol/dEhat = 2 vol G^{-1} Ehat
            for (std::size_t i = 0; i < what.size(); ++i) what.data()[i] *= 2.0 * vol;
            for (std::size_t c = 0; c < f; ++c) {
                double colsum = 0.0;
                for (std::size_t r = 1; r < k; ++r) colsum += what(r, c);
                const double mean_term = colsum / static_cast<double>(k);
                for (std::size_t j = 0; j < k; ++j) {
                    const double direct = (j + 1 < k) ? what(j + 1, c) : 0.0;
                    grad.d_decoder(j, c) += lambda * (direct - mean_term);
                }
            }
        }
    }

    if (loss_out) {
        loss_out->recon = nd / sqrt_b;
        loss_out->biorth = nm;
        loss_out->volume = vol;
        loss_out->lambda = lambda;
        loss_out->total = loss_out->recon + loss_out->biorth + lambda * loss_out->volume;
    }
    return grad;
}

} // namespace sca
