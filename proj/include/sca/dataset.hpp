#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "sca/matrix.hpp"
#include "sca/rng.hpp"

namespace sca {

/// Global min/max of a dataset; maps raw radiance onto [0, 1] and back.
struct ScaleParams {
    double y_min = 0.0;
    double y_max = 1.0;
};

/// N x F pixel-by-band cube plus optional raster geometry and band centers.
/// width * height == rows() whenever both are nonzero.
struct HsiDataset {
    Matrix y; // nonnegative, finite
    std::size_t width = 0, height = 0;
    std::vector<double> wavelengths;         // empty or length F
    std::optional<ScaleParams> scale_params; // set once scaled

    std::size_t pixels() const { return y.rows(); }
    std::size_t bands() const { return y.cols(); }
    bool has_geometry() const { return width > 0 && height > 0; }
};

struct GroundTruth {
    Matrix endmembers; // K x F, original units
    Matrix abundances; // N x K, rows on the simplex
};

struct NoiseConfig {
    double snr_db = std::numeric_limits<double>::infinity(); // +inf = no-op
    std::uint64_t seed = 0;
};

struct OutlierConfig {
    std::size_t count = 0;
    std::uint64_t seed = 0;
};

inline void validate_dataset(const HsiDataset& ds, const char* who) {
    if (ds.pixels() == 0 || ds.bands() == 0)
        throw contract_error(std::string(who) + ": empty dataset " + shape_str(ds.y));
    if (ds.has_geometry() && ds.width * ds.height != ds.pixels())
        throw contract_error(std::string(who) + ": raster " + std::to_string(ds.width) + "x" +
                             std::to_string(ds.height) + " does not cover " +
                             std::to_string(ds.pixels()) + " pixels");
    if (!ds.wavelengths.empty() && ds.wavelengths.size() != ds.bands())
        throw contract_error(std::string(who) + ": wavelength count mismatch");
    const double* p = ds.y.data();
    for (std::size_t i = 0; i < ds.y.size(); ++i) {
        if (!std::isfinite(p[i]))
            throw numeric_error(std::string(who) + ": non-finite radiance at flat index " + std::to_string(i));
        if (p[i] < 0.0)
            throw contract_error(std::string(who) + ": negative radiance at flat index " + std::to_string(i));
    }
}

/// (y - min) / (max - min) over the whole cube. Extremal entries map to exactly
/// 0 and 1. A constant cube has no scale.
inline HsiDataset scale(const HsiDataset& ds) {
    validate_dataset(ds, "scale");
    double lo = ds.y.data()[0], hi = ds.y.data()[0];
    const double* p = ds.y.data();
    for (std::size_t i = 0; i < ds.y.size(); ++i) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
    }
    if (!(hi > lo))
        throw contract_error("scale: degenerate dataset, min == max == " + std::to_string(lo));
    HsiDataset out = ds;
    const double span = hi - lo;
    double* q = out.y.data();
    for (std::size_t i = 0; i < out.y.size(); ++i) q[i] = (q[i] - lo) / span;
    out.scale_params = ScaleParams{lo, hi};
    return out;
}

/// Endmembers learned in scaled units -> original radiance units.
inline Matrix unscale_endmembers(const Matrix& e_scaled, const ScaleParams& p) {
    Matrix e = e_scaled;
    const double span = p.y_max - p.y_min;
    for (std::size_t i = 0; i < e.size(); ++i) e.data()[i] = e.data()[i] * span + p.y_min;
    return e;
}

/// Original-unit endmembers -> scaled units (same map as scale()).
inline Matrix scale_endmembers(const Matrix& e, const ScaleParams& p) {
    Matrix s = e;
    const double span = p.y_max - p.y_min;
    for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] = (s.data()[i] - p.y_min) / span;
    return s;
}

/// Additive white Gaussian noise at a target SNR, clamped to keep radiance
/// nonnegative. sigma^2 = mean(y^2) / 10^(snr_db / 10). +inf SNR returns the
/// input unchanged.
inline HsiDataset add_noise(const HsiDataset& ds, const NoiseConfig& cfg) {
    validate_dataset(ds, "add_noise");
    if (std::isinf(cfg.snr_db) && cfg.snr_db > 0.0) return ds;
    if (!std::isfinite(cfg.snr_db))
        throw contract_error("add_noise: snr_db must be finite or +inf");
    double mean_sq = 0.0;
    const double* p = ds.y.data();
    for (std::size_t i = 0; i < ds.y.size(); ++i) mean_sq += p[i] * p[i];
    mean_sq /= static_cast<double>(ds.y.size());
    const double sigma = std::sqrt(mean_sq / std::pow(10.0, cfg.snr_db / 10.0));
    HsiDataset out = ds;
    Rng rng(cfg.seed);
    double* q = out.y.data();
    for (std::size_t i = 0; i < out.y.size(); ++i)
        q[i] = std::max(0.0, q[i] + sigma * rng.normal());
    return out;
}

/// Replace `count` distinct random pixels with U[0,1)^F rows. Returns the new
/// dataset plus the sorted replaced indices.
inline std::pair<HsiDataset, std::vector<std::size_t>> add_outliers(const HsiDataset& ds,
                                                                    const OutlierConfig& cfg) {
    validate_dataset(ds, "add_outliers");
    if (cfg.count > ds.pixels())
        throw contract_error("add_outliers: count " + std::to_string(cfg.count) + " exceeds " +
                             std::to_string(ds.pixels()) + " pixels");
    HsiDataset out = ds;
    Rng rng(cfg.seed);
    std::vector<std::size_t> idx(ds.pixels());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < cfg.count; ++i) { // partial Fisher-Yates
        const std::size_t j = i + static_cast<std::size_t>(rng.index(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    std::vector<std::size_t> chosen(idx.begin(), idx.begin() + cfg.count);
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t n : chosen) {
        double* row = out.y.row(n);
        for (std::size_t f = 0; f < out.bands(); ++f) row[f] = rng.uniform01();
    }
    return {std::move(out), std::move(chosen)};
}

} // namespace sca
