#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace psrdet {

// All randomness flows through these helpers so that every artifact is
// bit-reproducible from (config, seed) regardless of platform stdlib
// distribution implementations.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed, a purpose tag and an
// index (e.g. a satellite id or scenario number).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ splitmix64(tag)) ^ splitmix64(index));
}

// Stream tags. Values are arbitrary but frozen: changing them changes every
// generated corpus.
namespace stream {
constexpr std::uint64_t kTrajectory = 0x7261796a74ULL;
constexpr std::uint64_t kClock = 0x636c6f636bULL;
constexpr std::uint64_t kSatNoise = 0x7361746e6fULL;
constexpr std::uint64_t kDropout = 0x64726f70ULL;
constexpr std::uint64_t kAttack = 0x6174746bULL;
constexpr std::uint64_t kSpoofer = 0x73706f6fULL;
constexpr std::uint64_t kRegionalNoise = 0x7265676eULL;
constexpr std::uint64_t kScenario = 0x7363656eULL;
constexpr std::uint64_t kQuantizer = 0x716e747aULL;
constexpr std::uint64_t kModelInit = 0x696e6974ULL;
constexpr std::uint64_t kBatchOrder = 0x6f726472ULL;
}  // namespace stream

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}
    RngStream(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0)
        : engine_(derive_seed(master, tag, index)) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] (inclusive). Rejection-free modulo bias is
    // negligible for the small ranges used here, but use Lemire-style
    // rejection anyway to keep draws exact.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(engine_());  // full range
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return lo + static_cast<std::int64_t>(v % span);
    }

    // Standard normal via Box-Muller. Draws two uniforms per call; the second
    // branch value is discarded so streams stay alignment-free.
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double sigma) { return sigma * normal(); }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace psrdet
