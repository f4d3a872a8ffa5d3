#pragma once

#include <cstdint>
#include <string_view>

namespace sixway {

// Counter-based random numbers: every draw is a pure function of
// (seed, stream key, counter), so results do not depend on thread scheduling.

constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Stream of uniforms keyed by a seed and a tuple of integers (pixel, sample, ...).
class CounterRng {
public:
    constexpr explicit CounterRng(std::uint64_t key) : key_(key) {}

    template <typename... Ints>
    static constexpr CounterRng keyed(std::uint64_t seed, Ints... parts) {
        std::uint64_t k = mix64(seed);
        ((k = hash_combine(k, static_cast<std::uint64_t>(parts))), ...);
        return CounterRng(k);
    }

    constexpr std::uint64_t next_bits() { return mix64(key_ ^ mix64(++counter_)); }
    constexpr double uniform() { return to_unit(next_bits()); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// FNV-1a, stable across platforms; used for keys and content hashes.
constexpr std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace sixway
