#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "sca/matrix.hpp"

namespace sca {

/// Spectral angle distance, radians. Both vectors must be nonzero.
inline double sad(const double* x, const double* y, std::size_t len) {
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    if (nx == 0.0 || ny == 0.0) throw contract_error("sad: zero vector");
    const double c = dot / (std::sqrt(nx) * std::sqrt(ny));
    return std::acos(std::clamp(c, -1.0, 1.0));
}

inline double sad(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw contract_error("sad: length mismatch " + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()));
    if (x.empty()) throw contract_error("sad: empty vectors");
    return sad(x.data(), y.data(), x.size());
}

/// Root-mean-square error over all elements.
inline double rmse(const Matrix& x, const Matrix& y) {
    if (!x.same_shape(y))
        throw contract_error("rmse: shape mismatch " + shape_str(x) + " vs " + shape_str(y));
    if (x.size() == 0) throw contract_error("rmse: empty matrices");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.data()[i] - y.data()[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(x.size()));
}

inline double rmse(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw contract_error("rmse: length mismatch " + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()));
    if (x.empty()) throw contract_error("rmse: empty vectors");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(x.size()));
}

} // namespace sca
