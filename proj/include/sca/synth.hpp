#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "sca/dataset.hpp"
#include "sca/metrics_basic.hpp"
#include "sca/rng.hpp"

namespace sca {

/// Linear-mixture scene generator.
///
/// Endmember spectra are smooth positive curves on [0,1]: one dominant bump
/// centred in the member's own stretch of the band axis plus 2-4 narrow
/// secondary features (3-5 Gaussian bumps total), rescaled to a random peak
/// below 1. Anchoring each member's main feature in a distinct band range
/// keeps the spectra well separated, the way real materials peak in
/// different parts of the spectrum; heavily overlapping spectra make the
/// mixture nearly rank-deficient and the scene unrepresentative. Rows are
/// redrawn until every pair is at least 0.15 rad apart in spectral angle.
/// Abundances are flat-Dirichlet rows; for each member one row is replaced
/// by a purity-weighted vertex, so purity=1 plants every spectrum verbatim
/// in the data. The cube is the exact product A * E (rank <= K).
inline std::pair<HsiDataset, GroundTruth> synth_generate(std::size_t k, std::size_t f, std::size_t n,
                                                         std::uint64_t seed, double purity = 1.0) {
    if (k < 2) throw contract_error("synth_generate: k must be at least 2");
    if (k > f) throw contract_error("synth_generate: k exceeds f (" + std::to_string(k) + " > " +
                                    std::to_string(f) + ")");
    if (n < k) throw contract_error("synth_generate: n must be at least k");
    if (!(purity > 0.0) || purity > 1.0)
        throw contract_error("synth_generate: purity must lie in (0, 1]");

    Rng rng(seed);
    const double fd = static_cast<double>(f);

    auto draw_spectrum = [&](std::size_t member) {
        std::vector<double> s(f, 0.0);
        const std::size_t bumps = 3 + static_cast<std::size_t>(rng.index(3)); // 3..5
        const double seg_lo = fd * static_cast<double>(member) / static_cast<double>(k);
        const double seg_hi = fd * static_cast<double>(member + 1) / static_cast<double>(k);
        for (std::size_t bi = 0; bi < bumps; ++bi) {
            const bool dominant = bi == 0;
            const double center = dominant
                ? rng.uniform(seg_lo + 0.15 * (seg_hi - seg_lo), seg_hi - 0.15 * (seg_hi - seg_lo))
                : rng.uniform(0.0, fd);
            const double sigma = dominant ? rng.uniform(0.03 * fd, 0.06 * fd)
                                          : rng.uniform(0.015 * fd, 0.04 * fd);
            const double height = dominant ? rng.uniform(0.70, 1.00) : rng.uniform(0.05, 0.20);
            for (std::size_t c = 0; c < f; ++c) {
                const double d = (static_cast<double>(c) - center) / sigma;
                s[c] += height * std::exp(-0.5 * d * d);
            }
        }
        const double peak = *std::max_element(s.begin(), s.end());
        const double target = rng.uniform(0.60, 0.95);
        for (double& v : s) v *= target / peak;
        return s;
    };

    const double min_separation = 0.15; // rad
    Matrix e(k, f);
    for (std::size_t r = 0; r < k; ++r) {
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            const std::vector<double> cand = draw_spectrum(r);
            bool ok = true;
            for (std::size_t p = 0; p < r && ok; ++p)
                ok = sad(cand.data(), e.row(p), f) >= min_separation;
            if (ok) {
                for (std::size_t c = 0; c < f; ++c) e(r, c) = cand[c];
                placed = true;
            }
        }
        if (!placed)
            throw contract_error("synth_generate: could not separate spectra after 200 attempts "
                                 "(seed " + std::to_string(seed) + ")");
    }

    Matrix a(n, k);
    std::vector<double> gamma(k);
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            gamma[j] = rng.exponential();
            sum += gamma[j];
        }
        for (std::size_t j = 0; j < k; ++j) a(r, j) = gamma[j] / sum;
    }

    // one near-pure pixel per member, at k distinct rows
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(rows.size() - i));
        std::swap(rows[i], rows[j]);
    }
    for (std::size_t j = 0; j < k; ++j) {
        double* row = a.row(rows[j]);
        const double rest = (1.0 - purity) / static_cast<double>(k - 1);
        for (std::size_t c = 0; c < k; ++c) row[c] = rest;
        row[j] = purity;
    }

    HsiDataset ds;
    ds.y = matmul(a, e);
    for (std::size_t h = static_cast<std::size_t>(std::sqrt(static_cast<double>(n))); h >= 1; --h) {
        if (n % h == 0) {
            ds.height = h;
            ds.width = n / h;
            break;
        }
    }
    validate_dataset(ds, "synth_generate");
    return {std::move(ds), GroundTruth{std::move(e), std::move(a)}};
}

} // namespace sca
