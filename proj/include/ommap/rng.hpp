#pragma once

#include <cstdint>
#include <random>

namespace ommap {

using Rng = std::mt19937_64;

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based split: the seed of sub-stream `index` of stream `stream`.
/// Independent of scheduling order, so thread count never changes results.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0) {
    return mix64(mix64(root ^ mix64(stream)) + index);
}

inline Rng make_rng(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0) {
    return Rng(derive_seed(root, stream, index));
}

}  // namespace ommap
