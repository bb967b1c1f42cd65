#pragma once

#include <cstdint>
#include <cmath>

namespace crossfit {

// Deterministic PRNG used everywhere randomness is needed. splitmix64 core,
// fully specified so results are identical across compilers and platforms
// (std::shuffle / std::normal_distribution are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n) via rejection sampling.
    std::uint64_t next_below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // Standard normal via Box-Muller; draws two uniforms per call.
    double next_normal() {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

private:
    std::uint64_t state_;
};

// Mixes a base seed with a stream index (e.g. repetition number) so that
// stream r's draws never depend on how many streams exist.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    Rng r(base ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
    return r.next_u64();
}

} // namespace crossfit
