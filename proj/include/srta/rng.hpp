#pragma once
// Portable seeded randomness.
//
// std::mt19937_64 is bit-exact across standard libraries, but the std
// distributions are not, so every draw used for selection, cohort synthesis
// and weight initialization goes through the helpers below. Together they
// are the documented generator algorithm: a selection made here can be
// reproduced by any implementation that follows docs/generator.md.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace srta {

// 64-bit FNV-1a.
inline constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                       std::uint64_t hash = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

// SplitMix64 finalizer; used to derive independent sub-seeds.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed ^ mix64(stream));
}

// Seed for a user's questionnaire: FNV-1a over username, a zero byte, nonce.
inline constexpr std::uint64_t session_seed(std::string_view username, std::string_view nonce) {
    std::uint64_t h = fnv1a64(username);
    h = fnv1a64(std::string_view("\0", 1), h);
    return fnv1a64(nonce, h);
}

class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, bound) by rejection; bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    // Uniform real in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; one output per call, no cached pair.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Exponential(1); a Gamma(1) draw for the persona weight scheme.
    double exponential() { return -std::log(1.0 - uniform()); }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const std::uint64_t j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace srta
