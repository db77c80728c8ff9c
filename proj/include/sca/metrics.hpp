#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "sca/dataset.hpp"
#include "sca/matrix.hpp"
#include "sca/metrics_basic.hpp"
#include "sca/model.hpp"

namespace sca {

namespace detail {

/// Minimum-cost injective assignment of all rows onto columns (rows <= cols),
/// shortest-augmenting-path form with potentials. Returns col index per row.
inline std::vector<int> hungarian(const std::vector<std::vector<double>>& cost, double* total_out = nullptr) {
    const std::size_t nr = cost.size();
    const std::size_t nc = nr ? cost[0].size() : 0;
    if (nr == 0 || nc < nr) throw contract_error("hungarian: need rows <= cols");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(nr + 1, 0.0), v(nc + 1, 0.0);
    std::vector<std::size_t> match(nc + 1, 0), way(nc + 1, 0);
    for (std::size_t i = 1; i <= nr; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(nc + 1, inf);
        std::vector<bool> used(nc + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= nc; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= nc; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col_of_row(nr, -1);
    double total = 0.0;
    for (std::size_t j = 1; j <= nc; ++j) {
        if (match[j] != 0) {
            col_of_row[match[j] - 1] = static_cast<int>(j - 1);
            total += cost[match[j] - 1][j - 1];
        }
    }
    if (total_out) *total_out = total;
    return col_of_row;
}

/// Optimal assignment cost over a row/column subset (-1 rows already fixed).
inline double subproblem_cost(const std::vector<std::vector<double>>& cost,
                              const std::vector<bool>& row_done, const std::vector<bool>& col_used) {
    std::vector<std::vector<double>> sub;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (row_done[i]) continue;
        std::vector<double> r;
        for (std::size_t j = 0; j < cost[i].size(); ++j)
            if (!col_used[j]) r.push_back(cost[i][j]);
        sub.push_back(std::move(r));
    }
    if (sub.empty()) return 0.0;
    double total = 0.0;
    hungarian(sub, &total);
    return total;
}

} // namespace detail

/// Minimum-total-SAD injective assignment of truth members onto extracted rows.
/// Returns, per extracted row, the matched truth index (-1 when unmatched).
/// Among cost-equal optima the one with the lowest extracted index for truth
/// member 0 wins, then for member 1, and so on.
inline std::vector<int> align_endmembers(const Matrix& extracted, const Matrix& truth) {
    const std::size_t kx = extracted.rows(), kt = truth.rows();
    if (kt == 0 || kx < kt)
        throw contract_error("align_endmembers: need extracted rows >= truth rows, got " +
                             shape_str(extracted) + " vs " + shape_str(truth));
    if (extracted.cols() != truth.cols())
        throw contract_error("align_endmembers: band mismatch " + shape_str(extracted) + " vs " +
                             shape_str(truth));
    std::vector<std::vector<double>> cost(kt, std::vector<double>(kx));
    for (std::size_t i = 0; i < kt; ++i)
        for (std::size_t j = 0; j < kx; ++j) cost[i][j] = sad(truth.row(i), extracted.row(j), truth.cols());

    double best = 0.0;
    detail::hungarian(cost, &best);
    const double tol = 1e-12 * std::max(1.0, std::fabs(best));

    // lexicographic refinement: fix the lowest usable extracted index per truth
    // member, in truth order, keeping the total optimal
    std::vector<bool> row_done(kt, false), col_used(kx, false);
    std::vector<int> ext_of_truth(kt, -1);
    double remaining = best;
    for (std::size_t i = 0; i < kt; ++i) {
        row_done[i] = true;
        for (std::size_t j = 0; j < kx; ++j) {
            if (col_used[j]) continue;
            col_used[j] = true;
            const double with_j = cost[i][j] + detail::subproblem_cost(cost, row_done, col_used);
            if (with_j <= remaining + tol) {
                ext_of_truth[i] = static_cast<int>(j);
                remaining -= cost[i][j];
                break;
            }
            col_used[j] = false;
        }
        if (ext_of_truth[i] < 0)
            throw numeric_error("align_endmembers: assignment refinement failed");
    }

    std::vector<int> truth_of_ext(kx, -1);
    for (std::size_t i = 0; i < kt; ++i) truth_of_ext[ext_of_truth[i]] = static_cast<int>(i);
    return truth_of_ext;
}

/// Extracted members whose abundance never reaches `threshold` on any pixel.
inline std::vector<std::size_t> detect_null_members(const Matrix& a, double threshold = 1e-3) {
    if (a.rows() == 0 || a.cols() == 0)
        throw contract_error("detect_null_members: empty abundances " + shape_str(a));
    if (!(threshold > 0.0))
        throw contract_error("detect_null_members: threshold must be positive");
    std::vector<std::size_t> nulls;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double peak = 0.0;
        for (std::size_t n = 0; n < a.rows(); ++n) peak = std::max(peak, a(n, j));
        if (peak < threshold) nulls.push_back(j);
    }
    return nulls;
}

/// Reference results on the standard benchmark scenes, bundled for
/// side-by-side reporting next to a run's own numbers.
struct ReferenceResult {
    const char* scene;
    double rmse_y, rmse_e, sad_e, rmse_a;
};

inline constexpr ReferenceResult kReferenceResults[] = {
    {"samson", 0.29e-4, 0.48e-5, 1.69e-4, 1.18e-5},
    {"jasper", 1.82e-4, 2.24e-5, 2.62e-4, 3.34e-5},
    {"urban", 0.04e-4, 0.13e-5, 1.43e-4, 1.56e-5},
};

struct EvalReport {
    std::size_t k_truth = 0;
    std::size_t k_extracted = 0;
    double null_threshold = 1e-3;
    std::size_t masked_rows = 0;

    std::vector<int> permutation;          // extracted index -> truth index, -1 unmatched
    std::vector<std::size_t> null_members; // extracted indices
    std::vector<double> sad_per_member;    // by truth index, radians, original units
    std::vector<double> rmse_a_per_member; // by truth index
    double sad_mean = 0.0;
    double rmse_a = 0.0; // all matched abundance entries
    double rmse_e = 0.0; // matched endmember rows, original units
    double rmse_y = 0.0; // reconstruction, original units
    std::size_t decoder_range_violations = 0; // unscaled entries outside [0,1] by > 1e-6
};

/// Full evaluation protocol: scale the cube the same way training does, run the
/// model, drop null members, align what remains to the ground truth by SAD, and
/// measure everything in original units. Rows listed in exclude_rows (e.g.
/// injected outliers, where true abundances are undefined) are masked out of
/// abundance/reconstruction metrics and of null detection.
inline EvalReport evaluate(const ScaWeights& w, const HsiDataset& data, const GroundTruth& gt,
                           double epsilon, double null_threshold = 1e-3,
                           const std::vector<std::size_t>& exclude_rows = {}) {
    validate_dataset(data, "evaluate");
    const std::size_t n = data.pixels(), f = data.bands();
    const std::size_t kx = w.decoder.rows(), kt = gt.endmembers.rows();
    if (w.decoder.cols() != f || w.encoder.rows() != f || w.encoder.cols() != kx)
        throw contract_error("evaluate: weights " + shape_str(w.encoder) + "/" + shape_str(w.decoder) +
                             " do not match data " + shape_str(data.y));
    if (gt.endmembers.cols() != f)
        throw contract_error("evaluate: truth endmembers " + shape_str(gt.endmembers) +
                             " do not match data " + shape_str(data.y));
    if (gt.abundances.rows() != n || gt.abundances.cols() != kt)
        throw contract_error("evaluate: truth abundances " + shape_str(gt.abundances) +
                             " do not match data/endmembers");
    if (kx < kt)
        throw contract_error("evaluate: fewer extracted members (" + std::to_string(kx) +
                             ") than truth members (" + std::to_string(kt) + ")");

    std::vector<bool> excluded(n, false);
    for (std::size_t r : exclude_rows) {
        if (r >= n) throw contract_error("evaluate: exclude row " + std::to_string(r) + " out of range");
        excluded[r] = true;
    }
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (!excluded[i]) ++m;
    if (m == 0) throw contract_error("evaluate: all rows excluded");

    const HsiDataset scaled = scale(data);
    const ScaleParams params = *scaled.scale_params;
    auto [a, yhat_s] = forward(scaled.y, w, epsilon);

    EvalReport rep;
    rep.k_truth = kt;
    rep.k_extracted = kx;
    rep.null_threshold = null_threshold;
    rep.masked_rows = n - m;

    // null detection on the rows that count
    for (std::size_t j = 0; j < kx; ++j) {
        double peak = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (!excluded[i]) peak = std::max(peak, a(i, j));
        if (peak < null_threshold) rep.null_members.push_back(j);
    }
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < kx; ++j)
        if (std::find(rep.null_members.begin(), rep.null_members.end(), j) == rep.null_members.end())
            active.push_back(j);
    if (active.empty()) throw numeric_error("evaluate: all extracted members are null");
    if (active.size() < kt)
        throw numeric_error("evaluate: only " + std::to_string(active.size()) +
                            " non-null members for " + std::to_string(kt) + " truth members");

    const Matrix e_un = unscale_endmembers(w.decoder, params);
    Matrix e_active(active.size(), f);
    for (std::size_t r = 0; r < active.size(); ++r)
        for (std::size_t c = 0; c < f; ++c) e_active(r, c) = e_un(active[r], c);

    const std::vector<int> truth_of_active = align_endmembers(e_active, gt.endmembers);
    rep.permutation.assign(kx, -1);
    std::vector<int> ext_of_truth(kt, -1);
    for (std::size_t r = 0; r < active.size(); ++r) {
        rep.permutation[active[r]] = truth_of_active[r];
        if (truth_of_active[r] >= 0) ext_of_truth[truth_of_active[r]] = static_cast<int>(active[r]);
    }

    rep.sad_per_member.resize(kt);
    rep.rmse_a_per_member.resize(kt);
    double sq_a = 0.0, sq_e = 0.0, sad_sum = 0.0;
    for (std::size_t i = 0; i < kt; ++i) {
        const std::size_t j = static_cast<std::size_t>(ext_of_truth[i]);
        rep.sad_per_member[i] = sad(gt.endmembers.row(i), e_un.row(j), f);
        sad_sum += rep.sad_per_member[i];
        double sq = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            if (excluded[r]) continue;
            const double d = a(r, j) - gt.abundances(r, i);
            sq += d * d;
        }
        rep.rmse_a_per_member[i] = std::sqrt(sq / static_cast<double>(m));
        sq_a += sq;
        for (std::size_t c = 0; c < f; ++c) {
            const double d = e_un(j, c) - gt.endmembers(i, c);
            sq_e += d * d;
        }
    }
    rep.sad_mean = sad_sum / static_cast<double>(kt);
    rep.rmse_a = std::sqrt(sq_a / static_cast<double>(m * kt));
    rep.rmse_e = std::sqrt(sq_e / static_cast<double>(kt * f));

    const double span = params.y_max - params.y_min;
    double sq_y = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        if (excluded[r]) continue;
        for (std::size_t c = 0; c < f; ++c) {
            const double rec = yhat_s(r, c) * span + params.y_min;
            const double d = rec - data.y(r, c);
            sq_y += d * d;
        }
    }
    rep.rmse_y = std::sqrt(sq_y / static_cast<double>(m * f));

    for (std::size_t i = 0; i < e_un.size(); ++i) {
        const double v = e_un.data()[i];
        if (v < -1e-6 || v > 1.0 + 1e-6) ++rep.decoder_range_violations;
    }
    return rep;
}

} // namespace sca
