#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace pnsim {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Saturation magnitude for every bit LLR crossing a module boundary.
inline constexpr double llr_max = 30.0;

/// Arithmetic operation tally, split the way the complexity table is:
/// two-term real additions, two-term real multiplications, and nonlinear
/// function evaluations (counted as lookup-table accesses).
struct OpCounts {
    std::uint64_t adds = 0;
    std::uint64_t mults = 0;
    std::uint64_t lut = 0;

    OpCounts& operator+=(const OpCounts& o) {
        adds += o.adds;
        mults += o.mults;
        lut += o.lut;
        return *this;
    }
    friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    double w = std::remainder(a, two_pi);
    if (w <= -std::numbers::pi) w += two_pi;
    return w;
}

}  // namespace pnsim
