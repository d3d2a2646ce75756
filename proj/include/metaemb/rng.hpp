// Deterministic named substreams: every random draw in the toolkit is keyed
// by (root seed, stage label, index) so per-word work can run in parallel and
// still reproduce bit-exactly.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace metaemb {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace detail

inline std::uint64_t substream_seed(std::uint64_t root, std::string_view stage,
                                    std::uint64_t index = 0) {
    std::uint64_t s = detail::splitmix64(root ^ detail::hash_label(stage));
    return detail::splitmix64(s ^ index);
}

inline std::mt19937_64 make_engine(std::uint64_t root, std::string_view stage,
                                   std::uint64_t index = 0) {
    return std::mt19937_64(substream_seed(root, stage, index));
}

}  // namespace metaemb
