#pragma once

#include <cmath>
#include <cstdint>

namespace gwg {

// Counter-based generator: draw k of stream (seed) is mix64(seed + (k+1)*GAMMA),
// i.e. SplitMix64 indexed by an explicit counter. Identical (seed, counter)
// reproduces identical u64 sequences on any platform; streams are split by
// remixing the seed with a stream key. See README for the exact constants.
struct RngState {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t next_u64() {
        ++counter;
        return mix64(seed + counter * kGamma);
    }

    // uniform in [0, 1), 53-bit resolution
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in (0, 1], safe under log()
    double next_unit_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Box-Muller, fixed cost of two draws per variate (no cached second value,
    // so the stream position stays a pure function of the variate count)
    double next_gaussian() {
        const double u1 = next_unit_pos();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // +1 / -1 with equal probability
    double next_rademacher() {
        return (next_u64() & 1ULL) ? 1.0 : -1.0;
    }

    // Derived stream with counter 0. Pure: does not advance this state.
    RngState split(std::uint64_t stream_key) const {
        return RngState{mix64(seed + mix64(stream_key ^ 0x6A09E667F3BCC909ULL)), 0};
    }
};

} // namespace gwg
