#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mmlab {

// SplitMix64 step; also used to mix seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Counter-based seed fan-out: every module derives its own stream from the
// single root seed, so adding a consumer never shifts another one's sequence.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t s = root ^ (0xA0761D6478BD642FULL * (stream + 1));
    splitmix64(s);
    return splitmix64(s);
}

// Self-contained PRNG with hand-rolled distributions. std::* distributions are
// implementation-defined across standard libraries; outputs here must be
// reproducible byte-for-byte from a seed alone.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1), 53-bit resolution
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [lo, hi], inclusive; unbiased via rejection
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return lo + static_cast<std::int64_t>(next_u64());  // full range
        const std::uint64_t reject_below = (0 - span) % span;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= reject_below) return lo + static_cast<std::int64_t>(r % span);
        }
    }

    // standard normal via Box-Muller; always consumes exactly two uniforms
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::uint64_t state_;
};

}  // namespace mmlab
