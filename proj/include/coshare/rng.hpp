#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace coshare::rng {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Independent engine for a named consumer of the run seed.
inline Engine substream(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = 0xCBF29CE484222325ull; // FNV-1a
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    std::uint64_t state = seed ^ h;
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                      static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state))};
    return Engine(seq);
}

/// Uniform integer in [0, n): Lemire's multiply-shift with rejection, so the
/// result does not depend on the standard library.
inline std::uint64_t uniform_below(Engine& e, std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(e()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t floor = (0 - n) % n;
        while (low < floor) {
            m = static_cast<unsigned __int128>(e()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& e) { return static_cast<double>(e() >> 11) * 0x1.0p-53; }

} // namespace coshare::rng
