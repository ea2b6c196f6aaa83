#pragma once

#include <cstdint>
#include <random>

namespace didguard::rng {

// splitmix64 finalizer; used to derive independent substreams from
// (seed, index) pairs so parallel work is reproducible regardless of
// scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t a) {
    return splitmix64(seed ^ splitmix64(a + 0x6a09e667f3bcc909ULL));
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix(mix(seed, a), b);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c) {
    return mix(mix(seed, a, b), c);
}

inline std::mt19937_64 engine_for(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(mix(seed, index));
}

}  // namespace didguard::rng
