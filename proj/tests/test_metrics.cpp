#include <catch_amalgamated.hpp>

#include "sca/metrics.hpp"
#include "sca/optim.hpp"
#include "sca/synth.hpp"

#include "oracles.hpp"

using sca::Matrix;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, sca::Rng& rng, double lo, double hi) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

} // namespace

TEST_CASE("spectral angle on pinned pairs") {
    const std::vector<double> x{1.0, 0.0}, y{0.0, 1.0}, z{-1.0, 0.0};
    CHECK(sca::sad(x, x) == 0.0); // clamp makes the self-angle exactly zero
    CHECK_THAT(sca::sad(x, y), Catch::Matchers::WithinAbs(std::acos(0.0), 1e-15));
    CHECK_THAT(sca::sad(x, z), Catch::Matchers::WithinAbs(std::acos(-1.0), 1e-15));

    std::vector<double> scaled{3.0, 0.0};
    CHECK(sca::sad(x, scaled) == 0.0); // scale invariance

    CHECK_THROWS_AS(sca::sad(x, {0.0, 0.0}), sca::contract_error);
    CHECK_THROWS_AS(sca::sad(x, {1.0, 2.0, 3.0}), sca::contract_error);
}

TEST_CASE("rmse on pinned pairs") {
    Matrix a(2, 2, 1.0), b(2, 2, 1.0);
    CHECK(sca::rmse(a, b) == 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = 1.5;
    CHECK_THAT(sca::rmse(a, b), Catch::Matchers::WithinAbs(0.5, 1e-15));
    Matrix c(1, 2);
    c(0, 0) = 3.0;
    c(0, 1) = 4.0;
    CHECK_THAT(sca::rmse(c, Matrix(1, 2)), Catch::Matchers::WithinAbs(std::sqrt(12.5), 1e-12));
    CHECK_THROWS_AS(sca::rmse(a, Matrix(2, 3)), sca::contract_error);
}

TEST_CASE("alignment on an identical set is the identity") {
    sca::Rng rng(97);
    const Matrix truth = random_matrix(3, 8, rng, 0.1, 1.0);
    const std::vector<int> perm = sca::align_endmembers(truth, truth);
    REQUIRE(perm.size() == 3);
    for (int j = 0; j < 3; ++j) CHECK(perm[static_cast<std::size_t>(j)] == j);
}

TEST_CASE("alignment undoes a row permutation") {
    sca::Rng rng(101);
    const Matrix truth = random_matrix(4, 10, rng, 0.1, 1.0);
    const std::size_t order[4] = {2, 0, 3, 1};
    Matrix shuffled(4, 10);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 10; ++c) shuffled(r, c) = truth(order[r], c);
    const std::vector<int> perm = sca::align_endmembers(shuffled, truth);
    for (std::size_t r = 0; r < 4; ++r) CHECK(perm[r] == static_cast<int>(order[r]));
}

TEST_CASE("alignment leaves surplus extracted rows unmatched") {
    sca::Rng rng(103);
    const Matrix truth = random_matrix(2, 6, rng, 0.1, 1.0);
    Matrix extracted(4, 6);
    for (std::size_t c = 0; c < 6; ++c) {
        extracted(0, c) = rng.uniform(0.1, 1.0); // decoy
        extracted(1, c) = truth(1, c);
        extracted(2, c) = rng.uniform(0.1, 1.0); // decoy
        extracted(3, c) = truth(0, c);
    }
    const std::vector<int> perm = sca::align_endmembers(extracted, truth);
    CHECK(perm[1] == 1);
    CHECK(perm[3] == 0);
    int matched = 0;
    for (int p : perm) matched += p >= 0;
    CHECK(matched == 2);
}

TEST_CASE("alignment matches exhaustive search on random instances") {
    sca::Rng rng(107);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t kt = 2 + rng.index(3);
        const std::size_t kx = kt + rng.index(3);
        const Matrix truth = random_matrix(kt, 6, rng, 0.05, 1.0);
        const Matrix extracted = random_matrix(kx, 6, rng, 0.05, 1.0);

        std::vector<std::vector<double>> cost(kt, std::vector<double>(kx));
        for (std::size_t i = 0; i < kt; ++i)
            for (std::size_t j = 0; j < kx; ++j)
                cost[i][j] = sca::sad(truth.row(i), extracted.row(j), 6);
        double best_cost = 0.0;
        const std::vector<int> expect = oracle::brute_force_assignment(cost, &best_cost);

        const std::vector<int> perm = sca::align_endmembers(extracted, truth);
        double got_cost = 0.0;
        std::vector<int> ext_of_truth(kt, -1);
        for (std::size_t j = 0; j < kx; ++j)
            if (perm[j] >= 0) {
                ext_of_truth[static_cast<std::size_t>(perm[j])] = static_cast<int>(j);
                got_cost += cost[static_cast<std::size_t>(perm[j])][j];
            }
        CHECK_THAT(got_cost, Catch::Matchers::WithinAbs(best_cost, 1e-10));
        CHECK(ext_of_truth == expect);
    }
}

TEST_CASE("alignment ties break toward the lowest extracted index") {
    // two identical extracted copies of the same truth row: pick the earlier one
    Matrix truth(1, 4);
    for (std::size_t c = 0; c < 4; ++c) truth(0, c) = 0.2 + 0.1 * static_cast<double>(c);
    Matrix extracted(3, 4);
    for (std::size_t c = 0; c < 4; ++c) {
        extracted(0, c) = 0.9 - 0.2 * static_cast<double>(c); // decoy
        extracted(1, c) = truth(0, c);
        extracted(2, c) = 2.0 * truth(0, c); // same angle: scaled copy
    }
    const std::vector<int> perm = sca::align_endmembers(extracted, truth);
    CHECK(perm[1] == 0);
    CHECK(perm[2] == -1);
}

TEST_CASE("null member detection respects the threshold") {
    Matrix a(4, 3);
    for (std::size_t n = 0; n < 4; ++n) {
        a(n, 0) = 0.5;
        a(n, 1) = 5e-4;
        a(n, 2) = 2e-3;
    }
    const auto nulls = sca::detect_null_members(a, 1e-3);
    REQUIRE(nulls.size() == 1);
    CHECK(nulls[0] == 1);
    CHECK(sca::detect_null_members(a, 1e-2).size() == 2);
    CHECK(sca::detect_null_members(a, 1e-4).empty());
    CHECK_THROWS_AS(sca::detect_null_members(a, 0.0), sca::contract_error);
}

TEST_CASE("evaluation of ground-truth weights reports near-zeros everywhere") {
    auto [ds, gt] = sca::synth_generate(3, 24, 200, 21, 1.0);
    const sca::HsiDataset scaled = sca::scale(ds);
    const sca::ScaWeights w = sca::gt_init(sca::scale_endmembers(gt.endmembers, *scaled.scale_params));
    const sca::EvalReport rep = sca::evaluate(w, ds, gt, 1e-16);

    CHECK(rep.k_truth == 3);
    CHECK(rep.k_extracted == 3);
    CHECK(rep.null_members.empty());
    CHECK(rep.sad_mean <= 1e-7);
    CHECK(rep.rmse_a <= 1e-7);
    CHECK(rep.rmse_e <= 1e-7);
    CHECK(rep.rmse_y <= 1e-7);
    CHECK(rep.decoder_range_violations == 0);
    for (int p : rep.permutation) CHECK(p >= 0);
}

TEST_CASE("evaluation flags a planted dead member and aligns the rest") {
    auto [ds, gt] = sca::synth_generate(3, 24, 200, 22, 1.0);
    const sca::HsiDataset scaled = sca::scale(ds);
    const Matrix e_s = sca::scale_endmembers(gt.endmembers, *scaled.scale_params);
    const sca::ScaWeights base = sca::gt_init(e_s);

    // widen to k=4: dead encoder column, arbitrary in-range decoder row
    sca::ScaWeights w{Matrix(24, 4), Matrix(4, 24)};
    for (std::size_t f = 0; f < 24; ++f)
        for (std::size_t j = 0; j < 3; ++j) w.encoder(f, j) = base.encoder(f, j);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t f = 0; f < 24; ++f) w.decoder(j, f) = base.decoder(j, f);
    for (std::size_t f = 0; f < 24; ++f) w.decoder(3, f) = 0.4;

    const sca::EvalReport rep = sca::evaluate(w, ds, gt, 1e-16);
    REQUIRE(rep.null_members.size() == 1);
    CHECK(rep.null_members[0] == 3);
    CHECK(rep.permutation[3] == -1);
    CHECK(rep.sad_mean <= 1e-7);
    CHECK(rep.rmse_a <= 1e-7);
}

TEST_CASE("evaluation matches a direct recomputation on a crafted scenario") {
    // tiny scene, hand-checkable: 2 members, 3 bands, 4 pixels
    sca::GroundTruth gt;
    gt.endmembers = Matrix(2, 3);
    gt.endmembers(0, 0) = 0.8; gt.endmembers(0, 1) = 0.2; gt.endmembers(0, 2) = 0.1;
    gt.endmembers(1, 0) = 0.1; gt.endmembers(1, 1) = 0.3; gt.endmembers(1, 2) = 0.9;
    gt.abundances = Matrix(4, 2);
    const double mix[4] = {1.0, 0.7, 0.3, 0.0};
    for (std::size_t n = 0; n < 4; ++n) {
        gt.abundances(n, 0) = mix[n];
        gt.abundances(n, 1) = 1.0 - mix[n];
    }
    sca::HsiDataset ds;
    ds.y = matmul(gt.abundances, gt.endmembers);
    ds.width = 4;
    ds.height = 1;

    const sca::HsiDataset scaled = sca::scale(ds);
    const sca::ScaWeights w = sca::gt_init(sca::scale_endmembers(gt.endmembers, *scaled.scale_params));
    const sca::EvalReport rep = sca::evaluate(w, ds, gt, 1e-16);

    // direct recomputation from first principles
    auto [a, yhat_s] = sca::forward(scaled.y, w, 1e-16);
    const sca::ScaleParams p = *scaled.scale_params;
    const Matrix e_un = sca::unscale_endmembers(w.decoder, p);
    double sq_a = 0.0, sq_y = 0.0, sq_e = 0.0, sad_sum = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        sad_sum += sca::sad(gt.endmembers.row(i), e_un.row(i), 3);
        for (std::size_t c = 0; c < 3; ++c) {
            const double d = e_un(i, c) - gt.endmembers(i, c);
            sq_e += d * d;
        }
    }
    for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 2; ++i) {
            const double d = a(n, i) - gt.abundances(n, i);
            sq_a += d * d;
        }
    for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t c = 0; c < 3; ++c) {
            const double rec = yhat_s(n, c) * (p.y_max - p.y_min) + p.y_min;
            const double d = rec - ds.y(n, c);
            sq_y += d * d;
        }
    CHECK_THAT(rep.rmse_a, Catch::Matchers::WithinAbs(std::sqrt(sq_a / 8.0), 1e-12));
    CHECK_THAT(rep.rmse_y, Catch::Matchers::WithinAbs(std::sqrt(sq_y / 12.0), 1e-12));
    CHECK_THAT(rep.rmse_e, Catch::Matchers::WithinAbs(std::sqrt(sq_e / 6.0), 1e-12));
    CHECK_THAT(rep.sad_mean, Catch::Matchers::WithinAbs(sad_sum / 2.0, 1e-12));
}

TEST_CASE("evaluation masks excluded rows out of the abundance metrics") {
    auto [ds, gt] = sca::synth_generate(3, 20, 150, 23, 1.0);
    auto [dirty, idx] = sca::add_outliers(ds, {12, 24});
    sca::GroundTruth gt_dirty = gt; // abundances undefined at outliers: mask them

    const sca::HsiDataset scaled = sca::scale(dirty);
    const sca::ScaWeights w = sca::gt_init(sca::scale_endmembers(gt.endmembers, *scaled.scale_params));

    const sca::EvalReport masked = sca::evaluate(w, dirty, gt_dirty, 1e-16, 1e-3, idx);
    CHECK(masked.masked_rows == 12);
    CHECK(masked.rmse_a <= 1e-6);
    CHECK(masked.rmse_y <= 1e-6);

    const sca::EvalReport polluted = sca::evaluate(w, dirty, gt_dirty, 1e-16);
    CHECK(polluted.rmse_y > 1e-3); // outlier rows cannot be reconstructed
}

TEST_CASE("evaluation rejects inconsistent inputs") {
    auto [ds, gt] = sca::synth_generate(3, 10, 50, 25, 1.0);
    const sca::HsiDataset scaled = sca::scale(ds);
    const sca::ScaWeights w = sca::gt_init(sca::scale_endmembers(gt.endmembers, *scaled.scale_params));
    sca::GroundTruth bad = gt;
    bad.endmembers = Matrix(3, 9, 0.5);
    CHECK_THROWS_AS(sca::evaluate(w, ds, bad, 1e-8), sca::contract_error);

    sca::ScaWeights narrow{Matrix(10, 2, 0.1), Matrix(2, 10, 0.1)};
    CHECK_THROWS_AS(sca::evaluate(narrow, ds, gt, 1e-8), sca::contract_error);
    CHECK_THROWS_AS(sca::evaluate(w, ds, gt, 1e-8, 1e-3, {999}), sca::contract_error);
}

TEST_CASE("reference results table carries the four pinned metrics per scene") {
    REQUIRE(std::size(sca::kReferenceResults) == 3);
    CHECK(std::string(sca::kReferenceResults[0].scene) == "samson");
    CHECK(sca::kReferenceResults[0].rmse_a == 1.18e-5);
    CHECK(sca::kReferenceResults[1].sad_e == 2.62e-4);
    CHECK(sca::kReferenceResults[2].rmse_y == 0.04e-4);
}
