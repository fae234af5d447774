#pragma once

#include <cstdint>

#include "math.hpp"

namespace frontier {

// splitmix64 finalizer; full avalanche over 64 bits.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based generator: every draw is a pure function of
// (seed, stream, hi, lo). Paths use hi = path index, lo = step index, so the
// sample is reproducible point-by-point no matter how work is scheduled.
struct CounterRng {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    std::uint64_t bits(std::uint64_t hi, std::uint64_t lo) const noexcept {
        std::uint64_t h = mix64(seed ^ 0x243f6a8885a308d3ULL);
        h = mix64(h ^ mix64(stream) ^ (hi * 0x9e3779b97f4a7c15ULL));
        return mix64(h ^ (lo * 0xc2b2ae3d27d4eb4fULL));
    }

    // Uniform on the open interval (0,1); never returns an endpoint.
    double uniform(std::uint64_t hi, std::uint64_t lo) const noexcept {
        return (static_cast<double>(bits(hi, lo) >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via the inverse-CDF transform of one uniform draw.
    double normal(std::uint64_t hi, std::uint64_t lo) const {
        return inv_norm_cdf(uniform(hi, lo));
    }
};

} // namespace frontier
