#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sca {

/// Deterministic helpers over std::mt19937_64 (whose output stream is pinned by
/// the standard). The value mappings below are hand-rolled because std::
/// distributions are not bit-stable across standard libraries:
///   uniform01:  top 53 bits -> [0, 1)
///   uniform_pos: (top 53 bits + 1) * 2^-53 -> (0, 1]
///   normal:     Box-Muller, two draws per value, no caching
///   index:      multiply-shift (Lemire) map of one draw onto [0, n)
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform_pos() { return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t index(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<__uint128_t>(eng_()) * n) >> 64);
    }

    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
    }

    double exponential() { return -std::log(uniform_pos()); }

private:
    std::mt19937_64 eng_;
};

} // namespace sca
