#pragma once

#include <cstdint>

#include "cwlab/errors.hpp"

namespace cwlab {

// SplitMix64 finalizer (Steele/Lea/Flood; Vigna's public-domain reference
// implementation). Full-avalanche mix of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// SplitMix64 generator. Chosen over <random> engines because the standard
// distributions are implementation-defined; every draw here is reproducible
// across platforms. First three outputs from seed 0 are
//   0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F
// (frozen in test_foundation).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        return mix64(z);
    }

    // Uniform draw from {0, ..., bound-1}, unbiased by rejection: accept only
    // draws below the largest multiple of bound representable in 64 bits.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw domain_error("below: bound must be positive");
        const std::uint64_t rem = (0 - bound) % bound;  // 2^64 mod bound
        std::uint64_t x = next();
        if (rem != 0) {
            const std::uint64_t limit = 0 - rem;  // largest multiple of bound
            while (x >= limit) x = next();
        }
        return x % bound;
    }

    // Uniform double in [0, 1) from the top 53 bits.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Bernoulli(p) draw.
    bool chance(double p) { return unit() < p; }

    // Independent child stream: the current state XOR an avalanche of the
    // index. Distinct indices give decorrelated streams; used to give each
    // trial / walk / tree its own generator.
    SplitMix64 stream(std::uint64_t index) const {
        return SplitMix64(state_ ^ mix64(index + 0x9E3779B97F4A7C15ull));
    }

private:
    std::uint64_t state_;
};

}  // namespace cwlab
