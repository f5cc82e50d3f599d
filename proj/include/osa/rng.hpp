#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace osa {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    // FNV-1a, folded through splitmix for avalanche
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

} // namespace detail

// Deterministically derives a child seed from a master seed and a purpose tag.
// Streams derived with distinct (tag, a, b) never alias, so per-channel traffic,
// per-device noise and learner randomness stay independent of one another.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t s = detail::splitmix64(master);
    s = detail::splitmix64(s ^ detail::hash_tag(tag));
    s = detail::splitmix64(s ^ (a * 0x9e3779b97f4a7c15ULL + 1));
    s = detail::splitmix64(s ^ (b * 0xc2b2ae3d27d4eb4fULL + 1));
    return s;
}

inline Rng make_rng(std::uint64_t master, std::string_view tag,
                    std::uint64_t a = 0, std::uint64_t b = 0) {
    return Rng(derive_seed(master, tag, a, b));
}

// Uniform draw on (0, 1]: never returns 0, may return exactly 1.
inline double uniform_open0(Rng& rng) {
    return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

} // namespace osa
