#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "sca/dataset.hpp"
#include "sca/linalg.hpp"
#include "sca/model.hpp"
#include "sca/rng.hpp"

namespace sca {

/// AdaMax accumulators. Update rule (per the cited optimizer):
///   m <- beta1 m + (1 - beta1) g
///   u <- max(beta2 u, |g|)
///   theta <- theta - lr / (1 - beta1^t) * m / (u + eps)
/// u decays by at most a factor beta2 per step and never drops below |g|.
struct AdamaxState {
    Matrix m_encoder, m_decoder;
    Matrix u_encoder, u_decoder;
    std::int64_t step = 0; // completed updates
    double beta1 = 0.9;
    double beta2 = 0.999;
    double lr = 1e-4;
    double eps = 1e-8;

    static AdamaxState init(std::size_t f, std::size_t k, double lr = 1e-4) {
        AdamaxState s;
        s.m_encoder = Matrix(f, k);
        s.m_decoder = Matrix(k, f);
        s.u_encoder = Matrix(f, k);
        s.u_decoder = Matrix(k, f);
        s.lr = lr;
        return s;
    }
};

struct TrainConfig {
    std::size_t k = 3;
    double lambda = 0.001;
    std::size_t epochs = 20;
    std::size_t steps_per_epoch = 1000;
    std::size_t batch_size = 64;
    double lr = 1e-4;
    double epsilon = kDefaultEpsilon;
    std::uint64_t seed = 0;
    std::size_t log_every = 100;
};

struct TrainRecord {
    std::size_t step = 0;      // global update count, 1-based
    LossBreakdown full;        // full-data loss after this update
    double tail_bound = 0.0;   // tail_energy(Y, k) / sqrt(N), recon units
    double wall_clock_sec = 0.0;
};

struct TrainHistory {
    std::vector<TrainRecord> records;
    double tail_bound = 0.0;     // constant for the run, recon units
    double wall_clock_sec = 0.0; // total

    /// Deterministic serialization; wall clock deliberately excluded so equal
    /// runs produce identical bytes.
    std::string to_csv() const {
        std::string s = "step,recon,biorth,volume,total,tail_energy\n";
        char buf[256];
        for (const TrainRecord& r : records) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step,
                          r.full.recon, r.full.biorth, r.full.volume, r.full.total, r.tail_bound);
            s += buf;
        }
        return s;
    }
};

/// Seeded uniform init: every entry U[0, 1/sqrt(F)). Encoder filled first,
/// then decoder, both row-major, one mt19937_64 stream.
inline ScaWeights init_weights(std::size_t f, std::size_t k, std::uint64_t seed) {
    if (f == 0 || k == 0)
        throw contract_error("init_weights: f and k must be positive");
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(f));
    ScaWeights w{Matrix(f, k), Matrix(k, f)};
    for (std::size_t i = 0; i < w.encoder.size(); ++i) w.encoder.data()[i] = rng.uniform01() * scale;
    for (std::size_t i = 0; i < w.decoder.size(); ++i) w.decoder.data()[i] = rng.uniform01() * scale;
    return w;
}

/// Ground-truth init: decoder = E, encoder = right pseudo-inverse of E, so
/// E Etilde = I and the model starts at the global optimum of the lambda=0 loss.
/// One Newton step Etilde <- Etilde (2I - E Etilde) squares the solve residual,
/// pushing ||E Etilde - I|| to the round-off floor independent of the scene.
inline ScaWeights gt_init(const Matrix& e_true) {
    require_finite(e_true, "gt_init");
    ScaWeights w;
    w.decoder = e_true;
    w.encoder = right_pseudo_inverse(e_true);
    const std::size_t k = e_true.rows();
    Matrix m = matmul(e_true, w.encoder); // K x K, ~= I
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = -m.data()[i];
    for (std::size_t j = 0; j < k; ++j) m(j, j) += 2.0;
    w.encoder = matmul(w.encoder, m);
    return w;
}

inline std::pair<ScaWeights, AdamaxState> adamax_step(ScaWeights w, const Gradients& g, AdamaxState s) {
    if (!w.encoder.same_shape(g.d_encoder) || !w.decoder.same_shape(g.d_decoder))
        throw contract_error("adamax_step: gradient shapes " + shape_str(g.d_encoder) + "/" +
                             shape_str(g.d_decoder) + " do not match weights " +
                             shape_str(w.encoder) + "/" + shape_str(w.decoder));
    if (!s.m_encoder.same_shape(w.encoder) || !s.m_decoder.same_shape(w.decoder))
        throw contract_error("adamax_step: state shapes do not match weights");
    s.step += 1;
    const double bias = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double scale = s.lr / bias;
    auto update = [&](Matrix& theta, Matrix& m, Matrix& u, const Matrix& grad) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = grad.data()[i];
            const double mi = s.beta1 * m.data()[i] + (1.0 - s.beta1) * gi;
            const double ui = std::max(s.beta2 * u.data()[i], std::fabs(gi));
            m.data()[i] = mi;
            u.data()[i] = ui;
            theta.data()[i] -= scale * mi / (ui + s.eps);
        }
    };
    update(w.encoder, s.m_encoder, s.u_encoder, g.d_encoder);
    update(w.decoder, s.m_decoder, s.u_decoder, g.d_decoder);
    return {std::move(w), std::move(s)};
}

/// Mini-batch training on a scaled dataset. Batches are sampled uniformly with
/// replacement from one mt19937_64 stream seeded by cfg.seed; no train/val
/// split. Full-data loss is logged every log_every steps and at the last step.
inline std::pair<ScaWeights, TrainHistory> train(const HsiDataset& data, const TrainConfig& cfg,
                                                 ScaWeights w) {
    validate_dataset(data, "train");
    const std::size_t n = data.pixels(), f = data.bands();
    if (cfg.k < 2) throw contract_error("train: k must be at least 2");
    if (cfg.steps_per_epoch < 1 || cfg.batch_size < 1 || cfg.log_every < 1)
        throw contract_error("train: steps_per_epoch, batch_size and log_every must be >= 1");
    if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr))
        throw contract_error("train: lr must be positive and finite");
    if (w.encoder.rows() != f || w.encoder.cols() != cfg.k || w.decoder.rows() != cfg.k ||
        w.decoder.cols() != f)
        throw contract_error("train: weights " + shape_str(w.encoder) + "/" + shape_str(w.decoder) +
                             " do not match data " + shape_str(data.y) + " with k=" +
                             std::to_string(cfg.k));
    for (std::size_t i = 0; i < data.y.size(); ++i) {
        const double v = data.y.data()[i];
        if (v < 0.0 || v > 1.0)
            throw contract_error("train: data not scaled to [0,1] (entry " + std::to_string(v) + ")");
    }

    TrainHistory hist;
    const std::size_t rank_cap = std::min(n, f);
    hist.tail_bound = cfg.k >= rank_cap ? 0.0
                                        : tail_energy(data.y, cfg.k) / std::sqrt(static_cast<double>(n));

    const std::size_t total = cfg.epochs * cfg.steps_per_epoch;
    if (total == 0) return {std::move(w), std::move(hist)};

    AdamaxState state = AdamaxState::init(f, cfg.k, cfg.lr);
    Rng batch_rng(cfg.seed);
    Matrix batch(cfg.batch_size, f);
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    for (std::size_t step = 1; step <= total; ++step) {
        for (std::size_t r = 0; r < cfg.batch_size; ++r) {
            const std::size_t src = static_cast<std::size_t>(batch_rng.index(n));
            const double* from = data.y.row(src);
            double* to = batch.row(r);
            for (std::size_t c = 0; c < f; ++c) to[c] = from[c];
        }
        LossBreakdown bd;
        Gradients g = backward(batch, w, cfg.lambda, cfg.epsilon, &bd);
        if (!std::isfinite(bd.total))
            throw numeric_error("train: non-finite loss at step " + std::to_string(step) +
                                " (recon=" + std::to_string(bd.recon) + ", biorth=" +
                                std::to_string(bd.biorth) + ", volume=" + std::to_string(bd.volume) +
                                "); last good step " + std::to_string(step - 1));
        auto [w2, s2] = adamax_step(std::move(w), g, std::move(state));
        w = std::move(w2);
        state = std::move(s2);

        if (step % cfg.log_every == 0 || step == total) {
            LossBreakdown full = loss(data.y, w, cfg.lambda, cfg.epsilon);
            if (!std::isfinite(full.total))
                throw numeric_error("train: non-finite full-data loss at step " + std::to_string(step));
            hist.records.push_back(TrainRecord{step, full, hist.tail_bound, elapsed()});
        }
    }
    hist.wall_clock_sec = elapsed();
    return {std::move(w), std::move(hist)};
}

} // namespace sca
