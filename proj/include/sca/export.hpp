#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "sca/matrix.hpp"
#include "sca/png.hpp"

namespace sca {

/// One grayscale abundance map: pixel = round(255 * clamp(a, 0, 1)).
inline std::vector<unsigned char> abundance_pixels(const Matrix& a, std::size_t member,
                                                   std::size_t width, std::size_t height) {
    if (member >= a.cols())
        throw contract_error("abundance_pixels: member " + std::to_string(member) + " out of range");
    if (width * height != a.rows())
        throw contract_error("abundance_pixels: raster " + std::to_string(width) + "x" +
                             std::to_string(height) + " does not cover " + std::to_string(a.rows()) +
                             " pixels");
    std::vector<unsigned char> px(a.rows());
    for (std::size_t n = 0; n < a.rows(); ++n) {
        const double v = std::min(1.0, std::max(0.0, a(n, member)));
        px[n] = static_cast<unsigned char>(std::lround(255.0 * v));
    }
    return px;
}

/// PNG per member: <prefix>_member<j>.png. Returns the written paths.
inline std::vector<std::string> export_abundance_maps(const std::string& prefix, const Matrix& a,
                                                      std::size_t width, std::size_t height) {
    std::vector<std::string> paths;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const std::string path = prefix + "_member" + std::to_string(j) + ".png";
        write_gray_png(path, width, height, abundance_pixels(a, j, width, height));
        paths.push_back(path);
    }
    return paths;
}

/// |extracted - truth| maps for matched members: <prefix>_diff_member<j>.png,
/// named by extracted index; perm maps extracted -> truth (-1 skipped).
inline std::vector<std::string> export_diff_maps(const std::string& prefix, const Matrix& a,
                                                 const Matrix& truth_a, const std::vector<int>& perm,
                                                 std::size_t width, std::size_t height) {
    if (perm.size() != a.cols())
        throw contract_error("export_diff_maps: permutation length mismatch");
    if (truth_a.rows() != a.rows())
        throw contract_error("export_diff_maps: row mismatch " + shape_str(a) + " vs " +
                             shape_str(truth_a));
    std::vector<std::string> paths;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        if (perm[j] < 0) continue;
        const std::size_t t = static_cast<std::size_t>(perm[j]);
        Matrix diff(a.rows(), 1);
        for (std::size_t n = 0; n < a.rows(); ++n)
            diff(n, 0) = std::fabs(a(n, j) - truth_a(n, t));
        const std::string path = prefix + "_diff_member" + std::to_string(j) + ".png";
        write_gray_png(path, width, height, abundance_pixels(diff, 0, width, height));
        paths.push_back(path);
    }
    return paths;
}

/// Wide CSV of spectra: band index, one column per extracted member, then one
/// per truth member when given.
inline void export_spectra_csv(const std::string& path, const Matrix& extracted, const Matrix* truth) {
    if (truth && truth->cols() != extracted.cols())
        throw contract_error("export_spectra_csv: band mismatch");
    std::ofstream out(path);
    if (!out) throw format_error(path + ": cannot open for writing");
    out << "band";
    for (std::size_t j = 0; j < extracted.rows(); ++j) out << ",member" << j;
    if (truth)
        for (std::size_t j = 0; j < truth->rows(); ++j) out << ",truth" << j;
    out << '\n';
    char buf[64];
    for (std::size_t c = 0; c < extracted.cols(); ++c) {
        out << c;
        for (std::size_t j = 0; j < extracted.rows(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", extracted(j, c));
            out << ',' << buf;
        }
        if (truth)
            for (std::size_t j = 0; j < truth->rows(); ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", (*truth)(j, c));
                out << ',' << buf;
            }
        out << '\n';
    }
    if (!out) throw format_error(path + ": write failed");
}

/// Per-pixel abundance rows (header a0..a{K-1}); `limit_cols` trims to the
/// first coordinates for 2-D projections.
inline void export_abundance_csv(const std::string& path, const Matrix& a, std::size_t limit_cols = 0) {
    const std::size_t k = limit_cols == 0 ? a.cols() : std::min(limit_cols, a.cols());
    std::ofstream out(path);
    if (!out) throw format_error(path + ": cannot open for writing");
    for (std::size_t j = 0; j < k; ++j) out << (j ? "," : "") << 'a' << j;
    out << '\n';
    char buf[64];
    for (std::size_t n = 0; n < a.rows(); ++n) {
        for (std::size_t j = 0; j < k; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", a(n, j));
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw format_error(path + ": write failed");
}

} // namespace sca
