#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bss {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derives an independent stream key from a root seed and a tuple of
/// coordinates, so each (seed, coordinates) stream is the same regardless of
/// the order in which streams are consumed.
template <class... Ts>
constexpr std::uint64_t stream_key(std::uint64_t seed, Ts... coords) noexcept {
    std::uint64_t k = mix64(seed);
    ((k = mix64(k ^ static_cast<std::uint64_t>(coords))), ...);
    return k;
}

using Engine = std::mt19937_64;

template <class... Ts>
Engine keyed_engine(std::uint64_t seed, Ts... coords) {
    return Engine(stream_key(seed, coords...));
}

inline double uniform01(Engine& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double uniform(Engine& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Engine& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double standard_normal(Engine& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace bss
