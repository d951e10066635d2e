#pragma once

#include <cstdint>

namespace mgd::data {

/// splitmix64 finalizer; decorrelates nearby seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and any number of stream coordinates.
template <typename... Ts>
constexpr std::uint64_t mix_seed(std::uint64_t seed, Ts... coords)
{
    std::uint64_t h = splitmix64(seed);
    ((h = splitmix64(h ^ static_cast<std::uint64_t>(coords))), ...);
    return h;
}

} // namespace mgd::data
