#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gfl {

using Rng = std::mt19937_64;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// seed = splitmix64(fnv1a64(name) ^ master). Every module seed in a run is
// derived from the master seed this way, so a run is fully determined by it.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view name) noexcept {
    return splitmix64(fnv1a64(name) ^ master);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view name, std::uint64_t index) noexcept {
    return splitmix64(derive_seed(master, name) + index);
}

}  // namespace gfl
