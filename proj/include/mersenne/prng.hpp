#pragma once

#include <cstdint>

namespace mersenne::rng {

// Deterministic 64-bit generator (splitmix64 update: golden-ratio increment,
// two xor-multiply finalization rounds).  One instance per consumer; the same
// seed always yields the same stream, on every platform.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform draw from [0, bound) by rejection on the top bits; bound >= 1.
    constexpr std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        int shift = 64;
        std::uint64_t b = bound - 1;
        while (b) {
            --shift;
            b >>= 1;
        }
        for (;;) {
            std::uint64_t v = next() >> shift;
            if (v < bound) return v;
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace mersenne::rng
