#pragma once

#include <cstdint>
#include <random>

namespace lifetail {

// All randomness in the library flows from a single 64-bit seed through
// named substreams, so that independent tasks (bootstrap replicates,
// simulated individuals, test scenarios) can run in any order or in
// parallel without changing results.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace stream_tag {
inline constexpr std::uint64_t simulate = 0x53494d554c415445ULL;   // "SIMULATE"
inline constexpr std::uint64_t bootstrap = 0x424f4f5453545250ULL;  // "BOOTSTRP"
}  // namespace stream_tag

// Derives an independent generator for (seed, tag, index).
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(seed ^ tag);
    s = splitmix64(s ^ splitmix64(index));
    return std::mt19937_64(s);
}

// Uniform draw on the open interval (0, 1). Implemented directly on the
// raw 64-bit output so that results do not depend on the standard
// library's distribution internals.
inline double uniform01(std::mt19937_64& rng) {
    std::uint64_t bits;
    do {
        bits = rng() >> 11;  // 53 random bits
    } while (bits == 0);
    return static_cast<double>(bits) * 0x1.0p-53;
}

// Uniform index in [0, n). The modulo bias is below 1e-13 for any n that
// fits in memory, and the draw stays reproducible across platforms.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

}  // namespace lifetail
