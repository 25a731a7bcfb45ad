#pragma once

#include <cstdint>
#include <random>

namespace langchange {

// ============================================================================
// Deterministic substreams: every independent work unit (replicate, run, grid
// point) gets its own engine seeded from (master seed, index) so results do not
// depend on scheduling or thread count.
// ============================================================================

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Engine substream(std::uint64_t master, std::uint64_t index) {
    return Engine(substream_seed(master, index));
}

// Uniform double in (0,1), never exactly 0.
inline double uniform_open(Engine& eng) {
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    return (static_cast<double>(eng() >> 11) + 0.5) * scale;
}

}  // namespace langchange
