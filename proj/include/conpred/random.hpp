#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace conpred {

using rng_engine = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent sub-stream seeds.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the sub-stream identified by `tags` under a master seed.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = mix64(seed);
    for (const std::uint64_t t : tags) {
        h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
    }
    return h;
}

// Stream tags. Arbitrary but fixed: changing one changes every dataset.
namespace stream {
inline constexpr std::uint64_t wave = 0x57415645;
inline constexpr std::uint64_t base_noise = 0x424e4f49;
inline constexpr std::uint64_t peak_noise = 0x504e4f49;
inline constexpr std::uint64_t reference = 0x52454653;
inline constexpr std::uint64_t init = 0x494e4954;
inline constexpr std::uint64_t shuffle = 0x53485546;
inline constexpr std::uint64_t level = 0x4c45564c;
inline constexpr std::uint64_t pairs = 0x50414952;
}  // namespace stream

}  // namespace conpred
